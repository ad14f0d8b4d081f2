#pragma once

// Test-side reference implementations. They deliberately avoid the library's
// own code paths: projectors are built from explicit Kronecker loops,
// windowed coherences come from closed-form antiderivatives, and random
// numbers come from std::mt19937_64.

#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Dense>

#include "dpm/qstate.hpp"

namespace oracle {

using cplx = std::complex<double>;
using M4 = Eigen::Matrix<cplx, 4, 4>;
using V4 = Eigen::Matrix<cplx, 4, 1>;

inline constexpr double kPi = 3.14159265358979323846;

/// |a><a| ⊗ |b><b| built element by element.
inline M4 projector(cplx ah, cplx av, cplx bh, cplx bv) {
  const cplx a[2] = {ah, av}, b[2] = {bh, bv};
  M4 p;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) p(2 * i + j, 2 * k + l) = a[i] * std::conj(a[k]) * b[j] * std::conj(b[l]);
  return p;
}

/// Analyzer amplitudes written out from the stated conventions.
inline void analyzer(char label, cplx& h, cplx& v) {
  const double s = 1.0 / std::sqrt(2.0);
  const cplx i(0.0, 1.0);
  switch (label) {
    case 'H': h = 1; v = 0; break;
    case 'V': h = 0; v = 1; break;
    case 'D': h = s; v = s; break;
    case 'A': h = s; v = -s; break;
    case 'R': h = s; v = -i * s; break;
    case 'L': h = s; v = i * s; break;
  }
}

inline double born(const M4& rho, char xx, char x) {
  cplx ah, av, bh, bv;
  analyzer(xx, ah, av);
  analyzer(x, bh, bv);
  return (rho * projector(ah, av, bh, bv)).trace().real();
}

inline M4 outer(const V4& v) { return v * v.adjoint(); }

inline M4 random_density(std::mt19937_64& gen, int rank = 4) {
  std::normal_distribution<double> n;
  Eigen::Matrix<cplx, 4, Eigen::Dynamic> g(4, rank);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < rank; ++c) g(r, c) = cplx(n(gen), n(gen));
  M4 m = g * g.adjoint();
  return m / m.trace().real();
}

inline Eigen::Matrix2cd random_unitary2(std::mt19937_64& gen) {
  std::normal_distribution<double> n;
  Eigen::Matrix2cd g;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) g(r, c) = cplx(n(gen), n(gen));
  Eigen::HouseholderQR<Eigen::Matrix2cd> qr(g);
  Eigen::Matrix2cd q = qr.householderQ();
  return q;
}

inline M4 kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  M4 m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) m(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
  return m;
}

/// <e^{iΩs}> for s ~ Exp(τ) restricted to [0, w): closed form.
inline cplx delta_t_coherence(double tau, double omega, double w) {
  const cplx k(1.0 / tau, -omega);
  if (std::isinf(w)) return 1.0 / (k * tau);
  return (1.0 - std::exp(-k * w)) / (k * tau) / (1.0 - std::exp(-w / tau));
}

/// <e^{iΩ(t_x − t_xx)}> with both emission times in [0, W): closed form of
///   ∫₀^W p_xx(a) ∫₀^{W−a} p_x(s) e^{iΩs} ds da  /  (same with Ω = 0).
inline cplx pulse_window_coherence(double tau_xx, double tau_x, double omega, double w) {
  auto numerator = [&](double om) {
    const cplx k(1.0 / tau_x, -om);
    const double g = 1.0 / tau_xx;
    const cplx d = k - g;
    return (1.0 / (k * tau_x)) * ((1.0 - std::exp(-w * g)) - g * std::exp(-k * w) * (std::exp(d * w) - 1.0) / d);
  };
  return numerator(omega) / numerator(0.0).real();
}

/// Asymptotic Kolmogorov-Smirnov critical value at the 1% level.
inline double ks_critical_1pct(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

}  // namespace oracle
