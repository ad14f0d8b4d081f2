#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dpm/analysis.hpp"

namespace dpm {

namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr unsigned kDepth = 15;
constexpr double kTol = 1e-12;

template <class F>
double integrate(F f, double a, double b) {
  if (!(b > a)) return 0.0;
  return gauss_kronrod<double, 61>::integrate(f, a, b, kDepth, kTol);
}

}  // namespace

cplx oracle_coherence(const EmitterParams& params, const TimeWindow& w, bool dpm, double slope_error,
                      WindowMode mode) {
  params.validate();
  if (!(w.width_ps > 0.0)) throw std::invalid_argument("oracle: window width must be positive");
  if (w.origin_ps < 0.0 || !std::isfinite(w.origin_ps)) throw std::invalid_argument("oracle: invalid window origin");
  const double txx = params.tau_xx_ps, tx = params.tau_x_ps;
  // An over-steep ramp overcompensates, reversing the residual precession.
  const double omega = dpm ? -params.omega_x() * slope_error : params.omega_x();
  const double inf = std::numeric_limits<double>::infinity();

  // Joint density of (t_xx, s = t_x − t_xx): independent exponentials.
  auto p_xx = [txx](double a) { return std::exp(-a / txx) / txx; };
  auto p_s = [tx](double s) { return std::exp(-s / tx) / tx; };

  double a_lo = 0.0, a_hi = inf;
  if (mode == WindowMode::pulse_referenced) {
    a_lo = w.origin_ps;
    a_hi = w.origin_ps + w.width_ps;
  }
  // Upper limit of s for a given t_xx.
  auto s_max = [&](double a) {
    if (mode == WindowMode::pulse_referenced) return std::isfinite(a_hi) ? a_hi - a : inf;
    return w.width_ps;
  };

  auto inner = [&](double a, auto g) {
    const double hi = s_max(a);
    if (std::isinf(hi)) return gauss_kronrod<double, 61>::integrate(g, 0.0, inf, kDepth, kTol);
    return integrate(g, 0.0, hi);
  };
  auto outer = [&](auto g) {
    auto h = [&](double a) { return p_xx(a) * inner(a, g); };
    if (std::isinf(a_hi)) return gauss_kronrod<double, 61>::integrate(h, a_lo, inf, kDepth, kTol);
    return integrate(h, a_lo, a_hi);
  };

  const double norm = outer([&](double s) { return p_s(s); });
  if (!(norm > 0.0)) throw std::invalid_argument("oracle: window holds no emission probability");
  const double re = outer([&](double s) { return p_s(s) * std::cos(omega * s); });
  const double im = outer([&](double s) { return p_s(s) * std::sin(omega * s); });
  return {re / norm, im / norm};
}

DensityMatrix oracle_rho(const EmitterParams& params, const TimeWindow& w, bool dpm, double slope_error,
                         WindowMode mode) {
  const cplx c = oracle_coherence(params, w, dpm, slope_error, mode);
  Matrix4c m = Matrix4c::Zero();
  m(0, 0) = m(3, 3) = 0.5;
  m(0, 3) = 0.5 * c;
  m(3, 0) = 0.5 * std::conj(c);
  return DensityMatrix(m);
}

}  // namespace dpm
