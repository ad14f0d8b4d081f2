#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpm/cascade.hpp"
#include "dpm/coincidence_map.hpp"
#include "dpm/tomography.hpp"

namespace dpm {

/// Equal-width acceptance window applied to both photons, [origin, origin + width).
struct TimeWindow {
  double width_ps = 0.0;
  double origin_ps = 0.0;
};

struct WindowedCounts {
  std::uint64_t total = 0;
  /// Included bin index range [first_bin, last_bin] on each axis.
  int first_bin = 0;
  int last_bin = -1;
  /// Edges of the union of included bins.
  double effective_origin_ps = 0.0;
  double effective_width_ps = 0.0;
};

/// Bins are included iff their center lies inside the window. Throws
/// std::invalid_argument if no bin qualifies or the window leaves the map.
WindowedCounts window_counts(const CoincidenceMap& map, const TimeWindow& w);
/// The same selection as a map with all excluded bins zeroed.
CoincidenceMap window_submap(const CoincidenceMap& map, const TimeWindow& w);

struct DeltaTProfile {
  ProjectionSetting setting;
  double bin_width_ps = 16.0;
  /// counts[k] sums map bins with (t_x bin − t_xx bin) = k ≥ 0.
  std::vector<std::uint64_t> counts;
  std::uint64_t negative_counts = 0;

  std::uint64_t total() const;
  /// Nominal Δt of bin k: the mean time difference of its bin pairs.
  double center_ps(int k) const { return k * bin_width_ps; }
};

DeltaTProfile diagonal_profile(const CoincidenceMap& map);

struct OscillationFit {
  double period_ps = 0.0;
  double visibility = 0.0;
  double phase_rad = 0.0;  // φ₀ in cos(ωΔt + φ₀), wrapped to (−π, π]
  double decay_ps = 0.0;
  double amplitude = 0.0;
  double offset = 0.0;
  double residual = 0.0;  // weighted sum of squared residuals per point
  bool converged = false;
  bool visibility_clamped = false;
};

/// A·e^{−x/τ}·(1 + V·cos(ωx + φ₀)) + B, weights 1/σ. The starting period is
/// the Fourier peak of the exponentially detrended data (ties go to the
/// longer period). Periods are confined between four sample spacings and the
/// data span. Requires at least 8 points.
OscillationFit fit_oscillation(std::span<const double> x, std::span<const double> y, std::span<const double> sigma);

/// Fits the Δt bins from 1 up to the last bin holding at least `min_count`
/// counts and centered below `max_delta_t_ps`, with Poisson weights. Bin 0 is
/// left out: it only sees half of the bin-pair kernel. Requires ≥ 8 non-empty
/// bins.
OscillationFit fit_oscillation(const DeltaTProfile& profile, std::uint64_t min_count = 5,
                               double max_delta_t_ps = std::numeric_limits<double>::infinity());

struct TrendOscillationFit {
  double period_ps = 0.0;
  double oscillation_amplitude = 0.0;
  double oscillation_decay_ps = 0.0;
  double trend_amplitude = 0.0;
  double trend_decay_ps = 0.0;
  double baseline = 0.0;
  double phase_rad = 0.0;
  bool converged = false;
};

/// B + A·e^{−x/τ₁} + C·e^{−x/τ₂}·cos(ωx + φ): a decaying curve with a damped
/// superimposed oscillation, as followed by negativity versus window width.
TrendOscillationFit fit_trend_oscillation(std::span<const double> x, std::span<const double> y,
                                          std::span<const double> sigma);

struct CurvePoint {
  double t_w_ps = 0.0;
  double negativity = 0.0;
  double uncertainty = 0.0;  // bootstrap σ, 0 when not requested
  std::uint64_t total_counts = 0;
  bool low_statistics = false;  // fewer than 100 counts across settings
  double effective_width_ps = 0.0;
  bool converged = false;
};

struct NegativityCurve {
  std::vector<CurvePoint> points;
  bool dpm = false;
};

struct SweepOptions {
  MleConfig mle;
  int bootstrap_resamples = 0;  // 0 disables; otherwise ≥ 100
  std::uint64_t bootstrap_seed = 0;
};

/// Window counts of every setting (exposure = simulated pulses).
std::vector<CountRecord> windowed_records(std::span<const CoincidenceMap> maps, const TimeWindow& w);

NegativityCurve negativity_vs_window(std::span<const CoincidenceMap> maps, std::span<const TimeWindow> windows,
                                     const SweepOptions& options, bool dpm);

enum class WindowMode {
  pulse_referenced,  // both emission times inside [origin, origin + t_w)
  delta_t,           // only 0 ≤ t_x − t_xx < t_w; t_xx unrestricted
};

/// Normalized ρ̄₁₄·2: the windowed average of e^{iΩ(t_x − t_xx)} with
/// Ω = ω_X (no DPM) or −ω_X·slope_error (DPM), by nested adaptive
/// Gauss–Kronrod quadrature over the sequential-exponential density.
cplx oracle_coherence(const EmitterParams& params, const TimeWindow& w, bool dpm, double slope_error = 0.0,
                      WindowMode mode = WindowMode::pulse_referenced);

/// diag(1/2, 0, 0, 1/2) with corner coherence c/2.
DensityMatrix oracle_rho(const EmitterParams& params, const TimeWindow& w, bool dpm, double slope_error = 0.0,
                         WindowMode mode = WindowMode::pulse_referenced);

void write_profile_csv(std::ostream& os, const DeltaTProfile& profile, bool dpm, std::uint64_t seed);
void write_curve_csv(std::ostream& os, const NegativityCurve& curve, std::uint64_t seed, const std::string& origin_mode);

}  // namespace dpm
