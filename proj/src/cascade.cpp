#include "dpm/cascade.hpp"

#include <cmath>

#include "dpm/errors.hpp"
#include "dpm/waveform.hpp"

namespace dpm {

namespace {

void require(bool ok, const char* field, const char* message) {
  if (!ok) throw ConfigError(field, message);
}

}  // namespace

void EmitterParams::validate() const {
  require(tau_xx_ps > 0.0 && std::isfinite(tau_xx_ps), "emitter.tau_xx_ps", "must be positive");
  require(tau_x_ps > 0.0 && std::isfinite(tau_x_ps), "emitter.tau_x_ps", "must be positive");
  require(fss_microev > 0.0 && std::isfinite(fss_microev), "emitter.fss_microev", "must be positive");
}

void SetupParams::validate() const {
  require(delay_line_ps > 0.0, "setup.delay_line_ps", "must be positive");
  require(clock_period_ps > 0.0, "setup.clock_period_ps", "must be positive");
  require(pulses_per_cycle > 0 && pulses_per_cycle % 2 == 0, "setup.pulses_per_cycle",
          "must be a positive even number (reference half + modulated half)");
  require(dpm_arm_offset_ps >= 0.0, "setup.dpm_arm_offset_ps", "must be non-negative");
}

void ImperfectionModel::validate() const {
  require(slope_error >= 0.0, "imperfections.slope_error", "must be non-negative");
  require(extinction_epsilon >= 0.0 && extinction_epsilon < 1.0, "imperfections.extinction_epsilon",
          "must lie in [0, 1)");
  require(drift_sigma_rad >= 0.0, "imperfections.drift_sigma_rad", "must be non-negative");
  require(detector_jitter_sigma_ps >= 0.0, "imperfections.detector_jitter_sigma_ps", "must be non-negative");
  require(dark_count_fraction >= 0.0 && dark_count_fraction <= 1.0, "imperfections.dark_count_fraction",
          "must lie in [0, 1]");
}

ImperfectionModel ImperfectionModel::paper_like() {
  ImperfectionModel m;
  m.slope_error = 0.05;
  m.extinction_epsilon = 0.1;
  m.drift_sigma_rad = 0.05;
  return m;
}

EmissionEvent sample_emission(const EmitterParams& params, CounterRng& rng) {
  EmissionEvent e;
  e.t_xx_ps = rng.exponential(params.tau_xx_ps);
  e.t_x_ps = e.t_xx_ps + rng.exponential(params.tau_x_ps);
  return e;
}

TwoPhotonKet cascade_ket(const EmissionEvent& event, const EmitterParams& params) {
  constexpr double s = 0.70710678118654752440;
  const double theta = params.omega_x() * (event.t_x_ps - event.t_xx_ps);
  return {s, 0.0, 0.0, std::polar(s, -theta)};
}

TwoPhotonKet apply_dpm(const TwoPhotonKet& ket, const PhaseWaveform& w, const EmissionEvent& event,
                       const SetupParams& setup, double slot_start_ps) {
  const double phi_x = waveform_phase(w, slot_start_ps + event.t_x_ps);
  const double phi_xx = waveform_phase(w, slot_start_ps + event.t_xx_ps + setup.xx_traversal_delay_ps());
  const cplx gx = std::polar(1.0, phi_x);
  const cplx gxx = std::polar(1.0, phi_xx);
  return {ket[0], ket[1] * gx, ket[2] * gxx, ket[3] * gx * gxx};
}

TwoPhotonKet apply_extinction(const TwoPhotonKet& ket, double eps_xx, double eps_x) {
  if (eps_xx == 0.0 && eps_x == 0.0) return ket;
  Matrix2c mxx, mx;
  const double cxx = std::sqrt(1.0 - eps_xx * eps_xx), cx = std::sqrt(1.0 - eps_x * eps_x);
  mxx << cxx, eps_xx, eps_xx, cxx;
  mx << cx, eps_x, eps_x, cx;
  Matrix4c m;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) m(2 * a + b, 2 * c + d) = mxx(a, c) * mx(b, d);
  return TwoPhotonKet(m * ket.amplitudes()).normalized();
}

TwoPhotonKet apply_imperfections(const TwoPhotonKet& ket, const ImperfectionModel& model, CounterRng& rng) {
  TwoPhotonKet out = ket;
  if (model.drift_sigma_rad > 0.0) {
    const double delta = model.drift_sigma_rad * rng.normal();
    const cplx half = std::polar(1.0, 0.5 * delta);
    out = TwoPhotonKet(out[0], out[1] * half, out[2] * half, out[3] * half * half);
  }
  return apply_extinction(out, model.extinction_epsilon, model.extinction_epsilon);
}

DetectedEvent detect(const EmissionEvent& event, const TwoPhotonKet& ket, const ProjectionSetting& setting,
                     const JonesVector& analyzer_xx, const JonesVector& analyzer_x, const ImperfectionModel& model,
                     double dark_range_ps, CounterRng& rng) {
  DetectedEvent d;
  d.setting = setting;
  d.accepted = rng.uniform() < born_probability(ket, analyzer_xx, analyzer_x);
  d.recorded_t_xx_ps = event.t_xx_ps;
  d.recorded_t_x_ps = event.t_x_ps;
  if (model.detector_jitter_sigma_ps > 0.0) {
    d.recorded_t_xx_ps = std::max(0.0, d.recorded_t_xx_ps + model.detector_jitter_sigma_ps * rng.normal());
    d.recorded_t_x_ps = std::max(0.0, d.recorded_t_x_ps + model.detector_jitter_sigma_ps * rng.normal());
  }
  if (d.accepted && model.dark_count_fraction > 0.0 && rng.uniform() < model.dark_count_fraction) {
    d.dark = true;
    d.recorded_t_xx_ps = dark_range_ps * rng.uniform();
    d.recorded_t_x_ps = dark_range_ps * rng.uniform();
  }
  return d;
}

DetectedEvent detect(const EmissionEvent& event, const TwoPhotonKet& ket, const ProjectionSetting& setting,
                     const ImperfectionModel& model, double dark_range_ps, CounterRng& rng) {
  return detect(event, ket, setting, basis_vector(setting.xx), basis_vector(setting.x), model, dark_range_ps, rng);
}

}  // namespace dpm
