#pragma once

// Two-qubit polarization state algebra for the XX/X photon pair.
//
// Basis order is (HH, HV, VH, VV); the first factor is always the biexciton
// photon, the second the exciton photon.

#include <array>
#include <complex>
#include <iosfwd>
#include <string>

#include <Eigen/Dense>

namespace dpm {

using cplx = std::complex<double>;
using Vector2c = Eigen::Matrix<cplx, 2, 1>;
using Vector4c = Eigen::Matrix<cplx, 4, 1>;
using Matrix2c = Eigen::Matrix<cplx, 2, 2>;
using Matrix4c = Eigen::Matrix<cplx, 4, 4>;

enum class Polarization { H, V, D, A, R, L };

inline constexpr std::array<Polarization, 6> kPolarizations = {
    Polarization::H, Polarization::V, Polarization::D,
    Polarization::A, Polarization::R, Polarization::L};

char to_char(Polarization p);
/// Throws std::invalid_argument for anything outside "HVDARL".
Polarization polarization_from_char(char c);

struct JonesVector {
  cplx h{1.0, 0.0};
  cplx v{0.0, 0.0};

  double norm() const { return std::sqrt(std::norm(h) + std::norm(v)); }
  JonesVector normalized() const;
  Vector2c vec() const { return Vector2c(h, v); }
};

/// D = (H+V)/√2, A = (H−V)/√2, R = (H−iV)/√2, L = (H+iV)/√2.
JonesVector basis_vector(Polarization p);

struct ProjectionSetting {
  Polarization xx = Polarization::H;
  Polarization x = Polarization::H;

  std::string label() const { return {to_char(xx), to_char(x)}; }
  /// Position in the canonical 6x6 grid (XX outer, X inner).
  int index() const { return static_cast<int>(xx) * 6 + static_cast<int>(x); }
  static ProjectionSetting from_index(int i);
  static ProjectionSetting from_label(const std::string& label);

  friend bool operator==(const ProjectionSetting&, const ProjectionSetting&) = default;
};

class TwoPhotonKet {
 public:
  TwoPhotonKet() : amp_(Vector4c::Zero()) { amp_(0) = 1.0; }
  explicit TwoPhotonKet(const Vector4c& amplitudes) : amp_(amplitudes) {}
  TwoPhotonKet(cplx hh, cplx hv, cplx vh, cplx vv) : amp_(hh, hv, vh, vv) {}

  const Vector4c& amplitudes() const { return amp_; }
  cplx operator[](int i) const { return amp_(i); }
  double norm() const { return amp_.norm(); }
  TwoPhotonKet normalized() const { return TwoPhotonKet(amp_ / amp_.norm()); }

  static TwoPhotonKet phi_plus();

 private:
  Vector4c amp_;
};

/// Kronecker product, biexciton factor first. Output is normalized.
TwoPhotonKet tensor(const JonesVector& xx, const JonesVector& x);

/// Physicality diagnostics for an arbitrary 4x4 matrix.
struct PhysicalityReport {
  double hermiticity_deviation = 0.0;  // max |m_ij − conj(m_ji)|
  double trace_deviation = 0.0;        // |tr m − 1|
  double min_eigenvalue = 0.0;         // of the Hermitian part
  bool physical = false;
};

PhysicalityReport check_physical(const Matrix4c& m, double tol);

/// A 4x4 Hermitian, unit-trace, positive semidefinite matrix. Construction
/// validates at hermiticity/trace tolerance 1e-10 and eigenvalue floor −1e-9
/// unless a looser tolerance is requested.
class DensityMatrix {
 public:
  DensityMatrix();  // |HH><HH|
  explicit DensityMatrix(const Matrix4c& m, double tol = 1e-10);

  const Matrix4c& matrix() const { return m_; }
  cplx operator()(int r, int c) const { return m_(r, c); }
  double purity() const;

  static DensityMatrix maximally_mixed();

 private:
  Matrix4c m_;
};

enum class Subsystem { first, second };

/// Rejects kets whose norm deviates from 1 by more than 1e-6.
DensityMatrix ket_to_density(const TwoPhotonKet& k);

/// Born rule for an arbitrary pair of analyzer states.
double born_probability(const DensityMatrix& rho, const JonesVector& b_xx, const JonesVector& b_x);
double born_probability(const DensityMatrix& rho, const ProjectionSetting& s);
double born_probability(const TwoPhotonKet& k, const JonesVector& b_xx, const JonesVector& b_x);
double born_probability(const TwoPhotonKet& k, const ProjectionSetting& s);

Matrix4c partial_transpose(const Matrix4c& m, Subsystem which = Subsystem::second);

/// Ascending eigenvalues of the Hermitian part of m.
Eigen::Vector4d hermitian_eigenvalues(const Matrix4c& m);

/// Sum of |λ| over negative eigenvalues of the partial transpose.
double negativity(const DensityMatrix& rho);

double fidelity_to(const DensityMatrix& rho, const TwoPhotonKet& target);
double fidelity_to(const TwoPhotonKet& psi, const TwoPhotonKet& target);

/// (1/2)‖a − b‖₁ via eigenvalues of the Hermitian difference.
double trace_distance(const Matrix4c& a, const Matrix4c& b);

/// Clip negative eigenvalues and renormalize to unit trace.
DensityMatrix project_to_physical(const Matrix4c& m);

/// Text record: header line, basis line, then 16 "row col re im" lines.
void write_density_record(std::ostream& os, const DensityMatrix& rho);
DensityMatrix read_density_record(std::istream& is);

}  // namespace dpm
