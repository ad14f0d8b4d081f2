#include "dpm/qstate.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dpm {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr char kLabels[] = "HVDARL";

}  // namespace

char to_char(Polarization p) { return kLabels[static_cast<int>(p)]; }

Polarization polarization_from_char(char c) {
  for (int i = 0; i < 6; ++i) {
    if (kLabels[i] == c) return static_cast<Polarization>(i);
  }
  throw std::invalid_argument(std::string("unknown polarization label '") + c + "'");
}

JonesVector JonesVector::normalized() const {
  const double n = norm();
  return {h / n, v / n};
}

JonesVector basis_vector(Polarization p) {
  const cplx i(0.0, 1.0);
  switch (p) {
    case Polarization::H: return {1.0, 0.0};
    case Polarization::V: return {0.0, 1.0};
    case Polarization::D: return {kInvSqrt2, kInvSqrt2};
    case Polarization::A: return {kInvSqrt2, -kInvSqrt2};
    case Polarization::R: return {kInvSqrt2, -i * kInvSqrt2};
    case Polarization::L: return {kInvSqrt2, i * kInvSqrt2};
  }
  throw std::logic_error("unreachable polarization");
}

ProjectionSetting ProjectionSetting::from_index(int i) {
  if (i < 0 || i >= 36) throw std::out_of_range("projection setting index out of range");
  return {static_cast<Polarization>(i / 6), static_cast<Polarization>(i % 6)};
}

ProjectionSetting ProjectionSetting::from_label(const std::string& label) {
  if (label.size() != 2) throw std::invalid_argument("projection setting label must have two letters: '" + label + "'");
  return {polarization_from_char(label[0]), polarization_from_char(label[1])};
}

TwoPhotonKet TwoPhotonKet::phi_plus() { return {kInvSqrt2, 0.0, 0.0, kInvSqrt2}; }

TwoPhotonKet tensor(const JonesVector& xx, const JonesVector& x) {
  return TwoPhotonKet(xx.h * x.h, xx.h * x.v, xx.v * x.h, xx.v * x.v).normalized();
}

Eigen::Vector4d hermitian_eigenvalues(const Matrix4c& m) {
  const Matrix4c herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

PhysicalityReport check_physical(const Matrix4c& m, double tol) {
  PhysicalityReport r;
  r.hermiticity_deviation = (m - m.adjoint()).cwiseAbs().maxCoeff();
  r.trace_deviation = std::abs(m.trace() - cplx(1.0, 0.0));
  r.min_eigenvalue = hermitian_eigenvalues(m)(0);
  r.physical = r.hermiticity_deviation <= tol && r.trace_deviation <= tol && r.min_eigenvalue >= -tol;
  return r;
}

DensityMatrix::DensityMatrix() : m_(Matrix4c::Zero()) { m_(0, 0) = 1.0; }

DensityMatrix::DensityMatrix(const Matrix4c& m, double tol) : m_(m) {
  const PhysicalityReport r = check_physical(m, tol);
  if (r.hermiticity_deviation > tol || r.trace_deviation > tol || r.min_eigenvalue < -std::max(tol, 1e-9)) {
    std::ostringstream msg;
    msg << "not a density matrix: hermiticity deviation " << r.hermiticity_deviation << ", trace deviation "
        << r.trace_deviation << ", min eigenvalue " << r.min_eigenvalue;
    throw std::invalid_argument(msg.str());
  }
}

double DensityMatrix::purity() const { return (m_ * m_).trace().real(); }

DensityMatrix DensityMatrix::maximally_mixed() { return DensityMatrix(Matrix4c::Identity() * 0.25); }

DensityMatrix ket_to_density(const TwoPhotonKet& k) {
  if (std::abs(k.norm() - 1.0) > 1e-6) {
    throw std::invalid_argument("ket_to_density: ket is not normalized (norm " + std::to_string(k.norm()) + ")");
  }
  const Vector4c& a = k.amplitudes();
  Matrix4c m = a * a.adjoint();
  // Exact Hermitian symmetry regardless of roundoff in the product.
  m = 0.5 * (m + m.adjoint()).eval();
  return DensityMatrix(m);
}

namespace {

Vector4c product_vector(const JonesVector& a, const JonesVector& b) {
  return Vector4c(a.h * b.h, a.h * b.v, a.v * b.h, a.v * b.v);
}

}  // namespace

double born_probability(const DensityMatrix& rho, const JonesVector& b_xx, const JonesVector& b_x) {
  const Vector4c v = product_vector(b_xx, b_x);
  return (v.adjoint() * rho.matrix() * v)(0).real();
}

double born_probability(const DensityMatrix& rho, const ProjectionSetting& s) {
  return born_probability(rho, basis_vector(s.xx), basis_vector(s.x));
}

double born_probability(const TwoPhotonKet& k, const JonesVector& b_xx, const JonesVector& b_x) {
  const cplx amp = std::conj(b_xx.h) * std::conj(b_x.h) * k[0] + std::conj(b_xx.h) * std::conj(b_x.v) * k[1] +
                   std::conj(b_xx.v) * std::conj(b_x.h) * k[2] + std::conj(b_xx.v) * std::conj(b_x.v) * k[3];
  return std::norm(amp);
}

double born_probability(const TwoPhotonKet& k, const ProjectionSetting& s) {
  return born_probability(k, basis_vector(s.xx), basis_vector(s.x));
}

Matrix4c partial_transpose(const Matrix4c& m, Subsystem which) {
  // Index (a, b) -> 2a + b with a the first photon.
  Matrix4c out;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) {
          const int row = 2 * a + b, col = 2 * c + d;
          if (which == Subsystem::second)
            out(row, col) = m(2 * a + d, 2 * c + b);
          else
            out(row, col) = m(2 * c + b, 2 * a + d);
        }
  return out;
}

double negativity(const DensityMatrix& rho) {
  const Eigen::Vector4d ev = hermitian_eigenvalues(partial_transpose(rho.matrix()));
  double n = 0.0;
  for (int i = 0; i < 4; ++i)
    if (ev(i) < 0.0) n -= ev(i);
  return n;
}

double fidelity_to(const DensityMatrix& rho, const TwoPhotonKet& target) {
  const Vector4c& t = target.amplitudes();
  return (t.adjoint() * rho.matrix() * t)(0).real();
}

double fidelity_to(const TwoPhotonKet& psi, const TwoPhotonKet& target) {
  return std::norm(target.amplitudes().dot(psi.amplitudes()));
}

double trace_distance(const Matrix4c& a, const Matrix4c& b) {
  return 0.5 * hermitian_eigenvalues(a - b).cwiseAbs().sum();
}

DensityMatrix project_to_physical(const Matrix4c& m) {
  const Matrix4c herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(herm);
  Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0);
  const double s = ev.sum();
  if (!(s > 0.0)) return DensityMatrix::maximally_mixed();
  ev /= s;
  Matrix4c out = es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  out = 0.5 * (out + out.adjoint()).eval();
  return DensityMatrix(out, 1e-9);
}

void write_density_record(std::ostream& os, const DensityMatrix& rho) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << "density_matrix v1\n";
  os << "basis HH HV VH VV\n";
  os << std::scientific << std::setprecision(15);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) os << r << ' ' << c << ' ' << rho(r, c).real() << ' ' << rho(r, c).imag() << '\n';
  os << "end\n";
  os.flags(flags);
  os.precision(prec);
}

DensityMatrix read_density_record(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("density_matrix", 0) != 0)
    throw std::runtime_error("density record: missing 'density_matrix' header");
  if (!std::getline(is, line) || line != "basis HH HV VH VV")
    throw std::runtime_error("density record: unexpected basis line '" + line + "'");
  Matrix4c m = Matrix4c::Zero();
  for (int k = 0; k < 16; ++k) {
    if (!std::getline(is, line)) throw std::runtime_error("density record: truncated");
    std::istringstream ls(line);
    int r = -1, c = -1;
    double re = 0, im = 0;
    if (!(ls >> r >> c >> re >> im) || r < 0 || r > 3 || c < 0 || c > 3)
      throw std::runtime_error("density record: malformed entry '" + line + "'");
    m(r, c) = cplx(re, im);
  }
  if (!std::getline(is, line) || line != "end") throw std::runtime_error("density record: missing 'end'");
  return DensityMatrix(m, 1e-9);
}

}  // namespace dpm
