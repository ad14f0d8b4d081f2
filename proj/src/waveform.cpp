#include "dpm/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dpm {

PhaseWaveform::PhaseWaveform(std::vector<PhaseSegment> segments, double period_ps)
    : segments_(std::move(segments)), period_ps_(period_ps) {
  if (period_ps_ < 0.0) throw std::invalid_argument("waveform period must be non-negative");
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const PhaseSegment& s = segments_[i];
    if (!(s.end_ps > s.start_ps)) throw std::invalid_argument("waveform segment " + std::to_string(i) + " has non-positive duration");
    if (i == 0) continue;
    const PhaseSegment& prev = segments_[i - 1];
    if (s.start_ps < prev.end_ps) throw std::invalid_argument("waveform segments overlap or are out of order at " + std::to_string(i));
    if (s.start_ps == prev.end_ps && std::abs(s.start_phase_rad - prev.end_phase_rad()) > 1e-9)
      throw std::invalid_argument("waveform phase discontinuous at segment " + std::to_string(i));
  }
  if (period_ps_ > 0.0 && !segments_.empty() &&
      (segments_.front().start_ps < 0.0 || segments_.back().end_ps > period_ps_ + 1e-9))
    throw std::invalid_argument("periodic waveform segments must lie within [0, period)");
}

void PhaseWaveform::set_clamp(double range_limit_rad, double center_rad) {
  if (!(range_limit_rad > 0.0)) throw std::invalid_argument("waveform range limit must be positive");
  clamp_ = true;
  range_limit_rad_ = range_limit_rad;
  clamp_center_rad_ = center_rad;
}

double PhaseWaveform::midpoint_rad() const {
  if (segments_.empty()) return 0.0;
  double lo = segments_.front().start_phase_rad, hi = lo;
  for (const PhaseSegment& s : segments_) {
    lo = std::min({lo, s.start_phase_rad, s.end_phase_rad()});
    hi = std::max({hi, s.start_phase_rad, s.end_phase_rad()});
  }
  return 0.5 * (lo + hi);
}

double waveform_phase(const PhaseWaveform& w, double t_ps) {
  const auto& segs = w.segments();
  if (segs.empty()) return 0.0;
  if (w.period_ps() > 0.0) {
    t_ps = std::fmod(t_ps, w.period_ps());
    if (t_ps < 0.0) t_ps += w.period_ps();
  }
  auto it = std::upper_bound(segs.begin(), segs.end(), t_ps,
                             [](double t, const PhaseSegment& s) { return t < s.start_ps; });
  double phase;
  if (it == segs.begin()) {
    phase = segs.front().start_phase_rad;
  } else {
    const PhaseSegment& s = *std::prev(it);
    phase = t_ps < s.end_ps ? s.start_phase_rad + s.slope_rad_per_ps * (t_ps - s.start_ps) : s.end_phase_rad();
  }
  if (w.clamped()) {
    const double half = 0.5 * w.range_limit_rad();
    phase = std::clamp(phase, w.clamp_center_rad() - half, w.clamp_center_rad() + half);
  }
  return phase;
}

double usable_ramp_duration_ps(double range_limit_rad, double slope_rad_per_ps) {
  return range_limit_rad / std::abs(slope_rad_per_ps);
}

namespace {

struct RampGeometry {
  double ramp_ps;
  double xx_start_ps;
};

RampGeometry ramp_geometry(const SetupParams& setup, const CompensationOptions& options) {
  const double xx_start = setup.xx_traversal_delay_ps() - options.xx_ramp_lead_ps;
  if (options.xx_ramp_lead_ps < 0.0 || !(xx_start > 0.0))
    throw std::invalid_argument("XX ramp lead must lie in [0, delay_line + dpm_arm_offset)");
  const double ramp = options.ramp_length_ps.value_or(xx_start);
  if (!(ramp > 0.0)) throw std::invalid_argument("ramp length must be positive");
  if (ramp > xx_start + 1e-9)
    throw std::invalid_argument("exciton and biexciton wavepacket windows overlap: ramp length " + std::to_string(ramp) +
                                " ps exceeds the biexciton ramp start " + std::to_string(xx_start) + " ps");
  if (xx_start + ramp > setup.clock_period_ps)
    throw std::invalid_argument("biexciton ramp extends into the next clock period");
  return {ramp, xx_start};
}

}  // namespace

CompensationDomain compensation_domain(const SetupParams& setup, const CompensationOptions& options) {
  const RampGeometry g = ramp_geometry(setup, options);
  return {g.ramp_ps - options.xx_ramp_lead_ps, g.ramp_ps};
}

PhaseWaveform build_compensation_waveform(const EmitterParams& params, const SetupParams& setup,
                                          const CompensationOptions& options) {
  params.validate();
  setup.validate();
  const RampGeometry g = ramp_geometry(setup, options);
  const double slope = (1.0 + options.slope_error) * params.omega_x();
  const double span = slope * g.ramp_ps;
  // Pair phase on |VV> is 2·low + span − slope·lead; choose low to null it.
  const double low = 0.5 * (slope * options.xx_ramp_lead_ps - span);
  const double high = low + span;
  const double clock = setup.clock_period_ps;
  // Reference slots rest at a multiple of 2π (identity on every amplitude)
  // near the middle of the swing, so the clamp never touches them.
  const double rest = kTwoPi * std::round((low + 0.5 * span) / kTwoPi);
  // Level changes between slots happen in the empty tail of each slot.
  const double busy_end = g.xx_start_ps + g.ramp_ps;
  const double transition = std::min(1000.0, 0.5 * (clock - busy_end));
  if (!(transition > 0.0)) throw std::invalid_argument("no room left in the clock period for the slot transition");

  std::vector<PhaseSegment> segs;
  auto push = [&](double t0, double t1, double phi0, double k) {
    if (t1 - t0 > 1e-12) segs.push_back({t0, t1, phi0, k});
  };
  auto level = [&](int slot) { return setup.slot_is_modulated(slot % setup.pulses_per_cycle) ? low : rest; };
  for (int slot = 0; slot < setup.pulses_per_cycle; ++slot) {
    const double s0 = slot * clock;
    const double t_tr = s0 + clock - transition;
    const double here = level(slot), next = level(slot + 1);
    if (!setup.slot_is_modulated(slot)) {
      push(s0, t_tr, rest, 0.0);
    } else {
      push(s0, s0 + g.ramp_ps, low, slope);
      push(s0 + g.ramp_ps, s0 + g.xx_start_ps, high, 0.0);
      push(s0 + g.xx_start_ps, s0 + busy_end, high, -slope);
      push(s0 + busy_end, t_tr, low, 0.0);
    }
    push(t_tr, s0 + clock, here, (next - here) / transition);
  }
  // Tiny roundoff at slot joins is absorbed by re-anchoring each start phase.
  for (std::size_t i = 1; i < segs.size(); ++i)
    if (std::abs(segs[i].start_ps - segs[i - 1].end_ps) < 1e-9) {
      segs[i].start_ps = segs[i - 1].end_ps;
      segs[i].start_phase_rad = segs[i - 1].end_phase_rad();
    }
  PhaseWaveform w(std::move(segs), setup.cycle_period_ps());
  if (options.clamp) w.set_clamp(options.range_limit_rad, low + 0.5 * span);
  return w;
}

PhaseWaveform ideal_compensation_waveform(const EmitterParams& params, const SetupParams& setup) {
  return build_compensation_waveform(params, setup, {});
}

PhaseWaveform paper_like_waveform(const EmitterParams& params, const SetupParams& setup,
                                  const ImperfectionModel& model) {
  CompensationOptions opt;
  opt.range_limit_rad = 2.0 * kTwoPi;
  opt.clamp = true;
  opt.ramp_length_ps = usable_ramp_duration_ps(opt.range_limit_rad, params.omega_x());
  opt.xx_ramp_lead_ps = setup.dpm_arm_offset_ps;
  opt.slope_error = model.slope_error;
  return build_compensation_waveform(params, setup, opt);
}

}  // namespace dpm
