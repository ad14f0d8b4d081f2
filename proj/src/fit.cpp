#include <ceres/ceres.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "dpm/analysis.hpp"

namespace dpm {

namespace {

double wrap_pi(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

struct DampedCosine {
  double x, y, w;
  template <typename T>
  bool operator()(const T* p, T* r) const {
    // p = {A, τ, V, ω, φ, B}
    const T model = p[0] * exp(-x / p[1]) * (T(1.0) + p[2] * cos(p[3] * x + p[4])) + p[5];
    r[0] = (model - y) * w;
    return true;
  }
};

struct TrendPlusCosine {
  double x, y, w;
  template <typename T>
  bool operator()(const T* p, T* r) const {
    // p = {B, A, τ1, C, τ2, ω, φ}
    const T model = p[0] + p[1] * exp(-x / p[2]) + p[3] * exp(-x / p[4]) * cos(p[5] * x + p[6]);
    r[0] = (model - y) * w;
    return true;
  }
};

struct Trend {
  double x, y, w;
  template <typename T>
  bool operator()(const T* p, T* r) const {
    r[0] = (p[0] + p[1] * exp(-x / p[2]) - y) * w;
    return true;
  }
};

void check_inputs(std::span<const double> x, std::span<const double> y, std::span<const double> sigma,
                  std::size_t min_points) {
  if (x.size() != y.size() || x.size() != sigma.size())
    throw std::invalid_argument("fit: x, y and sigma must have equal length");
  if (x.size() < min_points)
    throw std::invalid_argument("fit: need at least " + std::to_string(min_points) + " points");
  for (double s : sigma)
    if (!(s > 0.0)) throw std::invalid_argument("fit: sigma must be positive");
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) throw std::invalid_argument("fit: x must be strictly increasing");
}

struct SpectralPeak {
  double omega = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;
};

/// Shortest period the fits accept: four samples, so that amplitude and phase
/// stay separately determined (at two samples per period they trade off).
double max_omega(std::span<const double> x) {
  double min_dx = x.back() - x.front();
  for (std::size_t i = 1; i < x.size(); ++i) min_dx = std::min(min_dx, x[i] - x[i - 1]);
  return std::numbers::pi / (2.0 * min_dx);
}

/// Weighted periodogram of r between one period per span and max_omega; the
/// scan runs from low to high frequency and only a strictly larger power
/// replaces the best, so ties resolve to the longer period.
SpectralPeak spectral_peak(std::span<const double> x, const std::vector<double>& r, const std::vector<double>& w) {
  const double span = x.back() - x.front();
  const double w_lo = 2.0 * std::numbers::pi / span;
  const double w_hi = max_omega(x);
  const int steps = 4000;
  double wsum = 0.0;
  for (double v : w) wsum += v;
  SpectralPeak best;
  double best_power = -1.0;
  for (int k = 0; k <= steps; ++k) {
    const double om = w_lo + (w_hi - w_lo) * k / steps;
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * r[i] * std::polar(1.0, -om * x[i]);
    const double power = std::norm(acc);
    if (power > best_power) {
      best_power = power;
      best = {om, 2.0 * std::abs(acc) / wsum, std::arg(acc)};
    }
  }
  return best;
}

/// Weighted log-linear fit of y ≈ A·e^{−x/τ}; falls back to a flat trend.
std::pair<double, double> exponential_trend(std::span<const double> x, std::span<const double> y) {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0.0)) continue;
    const double w = y[i];
    const double ly = std::log(y[i]);
    sw += w;
    sx += w * x[i];
    sy += w * ly;
    sxx += w * x[i] * x[i];
    sxy += w * x[i] * ly;
  }
  const double det = sw * sxx - sx * sx;
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  const double span = x.back() - x.front();
  if (!(sw > 0.0) || !(std::abs(det) > 0.0)) return {std::max(mean, 1e-12), 10.0 * span};
  const double slope = (sw * sxy - sx * sy) / det;
  const double icpt = (sy - slope * sx) / sw;
  const double tau = slope < 0.0 ? -1.0 / slope : 10.0 * span;
  return {std::exp(icpt), std::min(tau, 10.0 * span)};
}

ceres::Solver::Options solver_options() {
  ceres::Solver::Options o;
  o.linear_solver_type = ceres::DENSE_QR;
  o.max_num_iterations = 500;
  o.function_tolerance = 1e-14;
  o.parameter_tolerance = 1e-12;
  o.gradient_tolerance = 1e-14;
  o.logging_type = ceres::SILENT;
  return o;
}

}  // namespace

OscillationFit fit_oscillation(std::span<const double> x, std::span<const double> y, std::span<const double> sigma) {
  check_inputs(x, y, sigma, 8);
  const double span = x.back() - x.front();

  // Stage 1: the non-oscillating trend A·e^{−x/τ} + B.
  const auto [a0, tau0] = exponential_trend(x, y);
  double t[3] = {0.0, a0, tau0};
  {
    ceres::Problem problem;
    for (std::size_t i = 0; i < x.size(); ++i)
      problem.AddResidualBlock(new ceres::AutoDiffCostFunction<Trend, 1, 3>(new Trend{x[i], y[i], 1.0 / sigma[i]}),
                               nullptr, t);
    problem.SetParameterLowerBound(t, 2, 1e-3 * span);
    ceres::Solver::Summary summary;
    ceres::Solve(solver_options(), &problem, &summary);
  }

  // Stage 2: oscillation seed from the spectrum of the relative residual.
  std::vector<double> r(x.size()), w(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double trend = t[1] * std::exp(-x[i] / t[2]);
    r[i] = trend > 0.0 ? (y[i] - t[0]) / trend - 1.0 : 0.0;
    w[i] = std::abs(trend) / sigma[i];
  }
  const SpectralPeak peak = spectral_peak(x, r, w);

  // Stage 3: full model from the spectral seed and from a zero-visibility
  // seed; the lower cost wins, which keeps flat data from locking onto a
  // spurious slow oscillation.
  double p[6] = {};
  ceres::Solver::Summary summary;
  bool have = false;
  for (double v0 : {std::min(peak.amplitude, 1.0), 0.0}) {
    double q[6] = {t[1], t[2], v0, peak.omega, peak.phase, t[0]};
    ceres::Problem problem;
    for (std::size_t i = 0; i < x.size(); ++i)
      problem.AddResidualBlock(new ceres::AutoDiffCostFunction<DampedCosine, 1, 6>(
                                   new DampedCosine{x[i], y[i], 1.0 / sigma[i]}),
                               nullptr, q);
    problem.SetParameterLowerBound(q, 1, 1e-3 * span);
    // At least one full period inside the data; slower "oscillations" only
    // reshape the envelope.
    problem.SetParameterLowerBound(q, 3, 2.0 * std::numbers::pi / span);
    problem.SetParameterUpperBound(q, 3, max_omega(x));
    ceres::Solver::Summary s;
    ceres::Solve(solver_options(), &problem, &s);
    if (!have || s.final_cost < summary.final_cost) {
      std::copy(q, q + 6, p);
      summary = s;
      have = true;
    }
  }

  OscillationFit f;
  f.converged = summary.termination_type == ceres::CONVERGENCE;
  if (p[2] < 0.0) {
    p[2] = -p[2];
    p[4] += std::numbers::pi;
  }
  f.amplitude = p[0];
  f.decay_ps = p[1];
  f.visibility = p[2];
  if (f.visibility > 1.0) {
    f.visibility = 1.0;
    f.visibility_clamped = true;
  }
  f.period_ps = 2.0 * std::numbers::pi / p[3];
  f.phase_rad = wrap_pi(p[4]);
  f.offset = p[5];
  f.residual = 2.0 * summary.final_cost / static_cast<double>(x.size());
  return f;
}

OscillationFit fit_oscillation(const DeltaTProfile& profile, std::uint64_t min_count, double max_delta_t_ps) {
  int last = -1;
  int nonempty = 0;
  for (std::size_t k = 0; k < profile.counts.size(); ++k)
    if (profile.counts[k] >= std::max<std::uint64_t>(min_count, 1) &&
        profile.center_ps(static_cast<int>(k)) < max_delta_t_ps)
      last = static_cast<int>(k);
  // Bin 0 only collects pairs sharing a time bin, half the triangular
  // kernel of the other bins, so it sits below the exponential and is skipped.
  for (int k = 1; k <= last; ++k) nonempty += profile.counts[k] > 0;
  if (nonempty < 8) throw std::invalid_argument("fit_oscillation: fewer than 8 populated Δt bins");
  std::vector<double> x, y, s;
  for (int k = 1; k <= last; ++k) {
    const double c = static_cast<double>(profile.counts[k]);
    x.push_back(profile.center_ps(k));
    y.push_back(c);
    s.push_back(std::sqrt(std::max(c, 1.0)));
  }
  return fit_oscillation(x, y, s);
}

TrendOscillationFit fit_trend_oscillation(std::span<const double> x, std::span<const double> y,
                                          std::span<const double> sigma) {
  check_inputs(x, y, sigma, 8);
  const double span = x.back() - x.front();

  // Stage 1: smooth trend alone.
  double t[3] = {y.back(), y.front() - y.back(), span / 3.0};
  {
    ceres::Problem problem;
    for (std::size_t i = 0; i < x.size(); ++i)
      problem.AddResidualBlock(
          new ceres::AutoDiffCostFunction<Trend, 1, 3>(new Trend{x[i] - x.front(), y[i], 1.0 / sigma[i]}), nullptr,
          t);
    problem.SetParameterLowerBound(t, 2, 1e-3 * span);
    ceres::Solver::Summary summary;
    ceres::Solve(solver_options(), &problem, &summary);
  }

  // Stage 2: oscillation seed from the residual spectrum.
  std::vector<double> r(x.size()), w(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    r[i] = y[i] - (t[0] + t[1] * std::exp(-(x[i] - x.front()) / t[2]));
    w[i] = 1.0 / sigma[i];
  }
  const SpectralPeak peak = spectral_peak(x, r, w);

  double p[7] = {t[0], t[1], t[2], peak.amplitude, span, peak.omega, peak.phase};
  ceres::Problem problem;
  for (std::size_t i = 0; i < x.size(); ++i)
    problem.AddResidualBlock(new ceres::AutoDiffCostFunction<TrendPlusCosine, 1, 7>(
                                 new TrendPlusCosine{x[i] - x.front(), y[i], 1.0 / sigma[i]}),
                             nullptr, p);
  problem.SetParameterLowerBound(p, 2, 1e-3 * span);
  problem.SetParameterLowerBound(p, 4, 1e-3 * span);
  problem.SetParameterLowerBound(p, 5, 2.0 * std::numbers::pi / span);
  problem.SetParameterUpperBound(p, 5, max_omega(x));
  ceres::Solver::Summary summary;
  ceres::Solve(solver_options(), &problem, &summary);

  if (p[3] < 0.0) {
    p[3] = -p[3];
    p[6] += std::numbers::pi;
  }
  TrendOscillationFit f;
  f.converged = summary.termination_type == ceres::CONVERGENCE;
  f.baseline = p[0];
  // Refer amplitudes back to x = 0.
  f.trend_amplitude = p[1] * std::exp(x.front() / p[2]);
  f.trend_decay_ps = p[2];
  f.oscillation_amplitude = p[3] * std::exp(x.front() / p[4]);
  f.oscillation_decay_ps = p[4];
  f.period_ps = 2.0 * std::numbers::pi / p[5];
  f.phase_rad = wrap_pi(p[6] - p[5] * x.front());
  return f;
}

}  // namespace dpm
