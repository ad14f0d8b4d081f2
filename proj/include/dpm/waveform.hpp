#pragma once

// Piecewise-linear EOM phase waveform, clock-synchronized.

#include <optional>
#include <vector>

#include "dpm/cascade.hpp"

namespace dpm {

struct PhaseSegment {
  double start_ps = 0.0;
  double end_ps = 0.0;
  double start_phase_rad = 0.0;
  double slope_rad_per_ps = 0.0;

  double end_phase_rad() const { return start_phase_rad + slope_rad_per_ps * (end_ps - start_ps); }
};

class PhaseWaveform {
 public:
  PhaseWaveform() = default;
  /// Segments must be time-ordered, non-overlapping and phase-continuous
  /// where adjacent (1e-9 rad); throws std::invalid_argument otherwise.
  explicit PhaseWaveform(std::vector<PhaseSegment> segments, double period_ps = 0.0);

  const std::vector<PhaseSegment>& segments() const { return segments_; }
  /// 0 means non-periodic.
  double period_ps() const { return period_ps_; }

  /// Hard clamp to [center − range/2, center + range/2].
  void set_clamp(double range_limit_rad, double center_rad);
  void disable_clamp() { clamp_ = false; }
  bool clamped() const { return clamp_; }
  double range_limit_rad() const { return range_limit_rad_; }
  double clamp_center_rad() const { return clamp_center_rad_; }

  /// Mid-value between the smallest and largest programmed phase.
  double midpoint_rad() const;

 private:
  std::vector<PhaseSegment> segments_;
  double period_ps_ = 0.0;
  bool clamp_ = false;
  double range_limit_rad_ = 2.0 * kTwoPi;
  double clamp_center_rad_ = kTwoPi;
};

/// Linear inside the covering segment, last value held in gaps and after the
/// final segment, first value before it; periodic waveforms wrap t first.
double waveform_phase(const PhaseWaveform& w, double t_ps);

struct CompensationOptions {
  /// Duration of each ramp. Unset means the longest ramp that still keeps the
  /// exciton and biexciton windows apart (the X ramp ends where the XX one starts).
  std::optional<double> ramp_length_ps;
  /// How far ahead of the nominal biexciton arrival the XX ramp begins.
  double xx_ramp_lead_ps = 0.0;
  /// Realized slope is (1 + slope_error)·ω_X.
  double slope_error = 0.0;
  bool clamp = false;
  double range_limit_rad = 2.0 * kTwoPi;
};

/// One cycle of pulses_per_cycle slots: reference slots rest at a multiple of
/// 2π, modulated slots carry a +ω_X ramp across the exciton window and a −ω_X
/// ramp across the delayed biexciton window. The ramp levels are chosen so the
/// pair phase left on |VV> is zero for every event inside both windows. Level
/// changes between slots are linear ramps in the last nanosecond of a slot,
/// where no photon of that pulse is left.
/// Throws std::invalid_argument if the two windows overlap or the biexciton
/// window runs into the next slot.
PhaseWaveform build_compensation_waveform(const EmitterParams& params, const SetupParams& setup,
                                          const CompensationOptions& options = {});

/// 4π range at slope ω_X: the EOM supports range/slope of continuous ramp.
double usable_ramp_duration_ps(double range_limit_rad, double slope_rad_per_ps);

/// The ideal (unclamped, longest-ramp) compensation waveform.
PhaseWaveform ideal_compensation_waveform(const EmitterParams& params, const SetupParams& setup);

/// 4π clamped range, ramps limited to range/ω_X, XX ramp started
/// dpm_arm_offset ahead of the photon, slope error from the model.
PhaseWaveform paper_like_waveform(const EmitterParams& params, const SetupParams& setup,
                                  const ImperfectionModel& model);

/// Largest t_xx and t_x (relative to the pulse) that the given compensation
/// options still cover with the ramps.
struct CompensationDomain {
  double max_t_xx_ps = 0.0;
  double max_t_x_ps = 0.0;
};
CompensationDomain compensation_domain(const SetupParams& setup, const CompensationOptions& options);

}  // namespace dpm
