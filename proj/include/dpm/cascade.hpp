#pragma once

// Biexciton-exciton cascade: emission times, the FSS-precessed two-photon
// state, the EOM phase action and the non-ideal optics around it.

#include <optional>

#include "dpm/qstate.hpp"
#include "dpm/rng.hpp"

namespace dpm {

class PhaseWaveform;

/// ħ in μeV·ps.
inline constexpr double kHbarMicroeVps = 658.2119569509066;
inline constexpr double kTwoPi = 6.283185307179586476925;

struct EmitterParams {
  double tau_xx_ps = 211.0;
  double tau_x_ps = 405.0;
  double fss_microev = 8.80;

  /// Precession angular frequency Δ_FSS/ħ in rad/ps.
  double omega_x() const { return fss_microev / kHbarMicroeVps; }
  /// h/Δ_FSS in ps.
  double precession_period_ps() const { return kTwoPi / omega_x(); }

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct SetupParams {
  double delay_line_ps = 1900.0;
  double clock_period_ps = 1.0e6 / 76.0;
  int pulses_per_cycle = 8;
  double dpm_arm_offset_ps = 300.0;

  /// Time after excitation at which a biexciton photon emitted at t=0 reaches the EOM.
  double xx_traversal_delay_ps() const { return delay_line_ps + dpm_arm_offset_ps; }
  double cycle_period_ps() const { return clock_period_ps * pulses_per_cycle; }
  /// The second half of each cycle is modulated, the first half is reference.
  bool slot_is_modulated(int slot) const { return slot >= pulses_per_cycle / 2; }

  void validate() const;
};

struct EmissionEvent {
  double t_xx_ps = 0.0;
  double t_x_ps = 0.0;
};

struct ImperfectionModel {
  double slope_error = 0.0;            // fractional error on the realized ramp slope
  double extinction_epsilon = 0.0;     // H/V amplitude leakage per photon
  double drift_sigma_rad = 0.0;        // quasi-static pair phase noise per event
  double detector_jitter_sigma_ps = 0.0;
  double dark_count_fraction = 0.0;

  bool is_ideal() const {
    return slope_error == 0.0 && extinction_epsilon == 0.0 && drift_sigma_rad == 0.0 &&
           detector_jitter_sigma_ps == 0.0 && dark_count_fraction == 0.0;
  }
  void validate() const;

  /// Versioned stand-in for the unquantified hardware non-idealities.
  static ImperfectionModel paper_like();
};

struct DetectedEvent {
  double recorded_t_xx_ps = 0.0;
  double recorded_t_x_ps = 0.0;
  ProjectionSetting setting;
  bool accepted = false;
  bool dark = false;  // spurious coincidence that replaced a real one
};

/// t_xx ~ Exp(τ_XX), t_x = t_xx + Exp(τ_X).
EmissionEvent sample_emission(const EmitterParams& params, CounterRng& rng);

/// (|HH> + e^{−iω_X(t_x − t_xx)}|VV>)/√2.
TwoPhotonKet cascade_ket(const EmissionEvent& event, const EmitterParams& params);

/// EOM in the V arm: the exciton photon samples the waveform at
/// slot_start + t_x, the delayed biexciton photon at
/// slot_start + t_xx + delay_line + dpm_arm_offset.
TwoPhotonKet apply_dpm(const TwoPhotonKet& ket, const PhaseWaveform& w, const EmissionEvent& event,
                       const SetupParams& setup, double slot_start_ps = 0.0);

/// Per-photon non-ideal beam-splitter √(1−ε²)·I + ε·X, renormalized.
TwoPhotonKet apply_extinction(const TwoPhotonKet& ket, double eps_xx, double eps_x);

/// Drift (one Normal(0, σ) pair phase on |VV>, split evenly between the two V
/// traversals) followed by extinction mixing. Slope error is not handled here;
/// it enters through the waveform.
TwoPhotonKet apply_imperfections(const TwoPhotonKet& ket, const ImperfectionModel& model, CounterRng& rng);

/// Born-rule acceptance against the given analyzer states, detector jitter on
/// the recorded times, and dark-count replacement uniform on [0, dark_range_ps).
DetectedEvent detect(const EmissionEvent& event, const TwoPhotonKet& ket, const ProjectionSetting& setting,
                     const JonesVector& analyzer_xx, const JonesVector& analyzer_x, const ImperfectionModel& model,
                     double dark_range_ps, CounterRng& rng);

DetectedEvent detect(const EmissionEvent& event, const TwoPhotonKet& ket, const ProjectionSetting& setting,
                     const ImperfectionModel& model, double dark_range_ps, CounterRng& rng);

}  // namespace dpm
