#include <doctest.h>

#include <random>
#include <sstream>

#include "dpm/qstate.hpp"
#include "oracles.hpp"

using namespace dpm;

namespace {

const double s2 = 1.0 / std::sqrt(2.0);
const cplx I(0.0, 1.0);

DensityMatrix coherent_mixture(cplx c) {
  Matrix4c m = Matrix4c::Zero();
  m(0, 0) = m(3, 3) = 0.5;
  m(0, 3) = 0.5 * c;
  m(3, 0) = 0.5 * std::conj(c);
  return DensityMatrix(m);
}

DensityMatrix werner(double p) {
  return DensityMatrix(p * ket_to_density(TwoPhotonKet::phi_plus()).matrix() +
                       (1.0 - p) * 0.25 * Matrix4c::Identity());
}

}  // namespace

TEST_CASE("basis vectors follow the stated conventions") {
  const JonesVector h = basis_vector(Polarization::H);
  CHECK(std::abs(h.h - 1.0) < 1e-15);
  CHECK(std::abs(h.v) < 1e-15);
  const JonesVector v = basis_vector(Polarization::V);
  CHECK(std::abs(v.h) < 1e-15);
  CHECK(std::abs(v.v - 1.0) < 1e-15);
  const JonesVector d = basis_vector(Polarization::D);
  CHECK(std::abs(d.h - s2) < 1e-15);
  CHECK(std::abs(d.v - s2) < 1e-15);
  const JonesVector r = basis_vector(Polarization::R);
  CHECK(std::abs(r.h - s2) < 1e-15);
  CHECK(std::abs(r.v + I * s2) < 1e-15);
  for (Polarization p : kPolarizations) CHECK(std::abs(basis_vector(p).norm() - 1.0) < 1e-12);
}

TEST_CASE("labels round-trip and reject garbage") {
  for (int k = 0; k < 36; ++k) {
    const ProjectionSetting s = ProjectionSetting::from_index(k);
    CHECK(s.index() == k);
    CHECK(ProjectionSetting::from_label(s.label()) == s);
  }
  CHECK_THROWS_AS(polarization_from_char('X'), std::invalid_argument);
  CHECK_THROWS_AS(ProjectionSetting::from_label("HHH"), std::invalid_argument);
}

TEST_CASE("tensor products") {
  auto b = [](Polarization p) { return basis_vector(p); };
  const TwoPhotonKet hh = tensor(b(Polarization::H), b(Polarization::H));
  CHECK((hh.amplitudes() - Vector4c(1, 0, 0, 0)).norm() < 1e-15);
  const TwoPhotonKet vv = tensor(b(Polarization::V), b(Polarization::V));
  CHECK((vv.amplitudes() - Vector4c(0, 0, 0, 1)).norm() < 1e-15);
  const TwoPhotonKet dd = tensor(b(Polarization::D), b(Polarization::D));
  CHECK((dd.amplitudes() - Vector4c(0.5, 0.5, 0.5, 0.5)).norm() < 1e-15);
  // Biexciton factor first: H_xx V_x is the HV amplitude.
  const TwoPhotonKet hv = tensor(b(Polarization::H), b(Polarization::V));
  CHECK(std::abs(hv[1] - 1.0) < 1e-15);
}

TEST_CASE("ket_to_density") {
  const DensityMatrix hh = ket_to_density(TwoPhotonKet(1, 0, 0, 0));
  Matrix4c expect = Matrix4c::Zero();
  expect(0, 0) = 1;
  CHECK((hh.matrix() - expect).norm() < 1e-15);

  const DensityMatrix phi = ket_to_density(TwoPhotonKet::phi_plus());
  expect.setZero();
  expect(0, 0) = expect(0, 3) = expect(3, 0) = expect(3, 3) = 0.5;
  CHECK((phi.matrix() - expect).norm() < 1e-15);
  CHECK(std::abs(phi.purity() - 1.0) < 1e-10);

  const double theta = 0.77;
  const DensityMatrix rot = ket_to_density(TwoPhotonKet(s2, 0, 0, std::polar(s2, -theta)));
  CHECK(std::abs(rot(0, 3) - 0.5 * std::polar(1.0, theta)) < 1e-15);

  CHECK_THROWS_AS(ket_to_density(TwoPhotonKet(1, 0, 0, 0.01)), std::invalid_argument);
}

TEST_CASE("born probabilities") {
  const DensityMatrix phi = ket_to_density(TwoPhotonKet::phi_plus());
  CHECK(born_probability(phi, {Polarization::H, Polarization::H}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(born_probability(phi, {Polarization::R, Polarization::R})) < 1e-12);

  for (double theta : {0.0, 0.4, 1.3, 2.9, 4.4}) {
    const TwoPhotonKet k(s2, 0, 0, std::polar(s2, -theta));
    CHECK(born_probability(k, {Polarization::R, Polarization::R}) ==
          doctest::Approx((1.0 - std::cos(theta)) / 4.0).epsilon(1e-12));
  }

  // Against explicitly assembled projectors, and basis completeness.
  std::mt19937_64 gen(11);
  const char* labels = "HVDARL";
  for (int trial = 0; trial < 20; ++trial) {
    const DensityMatrix rho(oracle::random_density(gen));
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) {
        const double p = born_probability(rho, ProjectionSetting::from_index(6 * a + b));
        CHECK(std::abs(p - oracle::born(rho.matrix(), labels[a], labels[b])) < 1e-12);
        CHECK(p >= -1e-10);
        CHECK(p <= 1.0 + 1e-10);
      }
    for (int i = 0; i < 6; i += 2)
      for (int j = 0; j < 6; j += 2) {
        double sum = 0.0;
        for (int a = i; a < i + 2; ++a)
          for (int b = j; b < j + 2; ++b) sum += born_probability(rho, ProjectionSetting::from_index(6 * a + b));
        CHECK(std::abs(sum - 1.0) < 1e-10);
      }
  }
}

TEST_CASE("partial transpose") {
  Matrix4c hh = Matrix4c::Zero();
  hh(0, 0) = 1;
  CHECK((partial_transpose(hh) - hh).norm() < 1e-15);

  const Matrix4c pt = partial_transpose(ket_to_density(TwoPhotonKet::phi_plus()).matrix());
  const Eigen::Vector4d ev = hermitian_eigenvalues(pt);
  CHECK(ev(0) == doctest::Approx(-0.5).epsilon(1e-12));
  for (int i = 1; i < 4; ++i) CHECK(ev(i) == doctest::Approx(0.5).epsilon(1e-12));

  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix4c rho = oracle::random_density(gen);
    for (Subsystem s : {Subsystem::first, Subsystem::second}) {
      const Matrix4c p = partial_transpose(rho, s);
      CHECK((partial_transpose(p, s) - rho).norm() < 1e-15);
      CHECK(std::abs(p.trace() - rho.trace()) < 1e-12);
      CHECK((p - p.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    }
    // Transposing either side gives the same spectrum.
    const Eigen::Vector4d a = hermitian_eigenvalues(partial_transpose(rho, Subsystem::first));
    const Eigen::Vector4d b = hermitian_eigenvalues(partial_transpose(rho, Subsystem::second));
    CHECK((a - b).norm() < 1e-10);
  }
}

TEST_CASE("negativity values") {
  CHECK(negativity(ket_to_density(TwoPhotonKet::phi_plus())) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(negativity(DensityMatrix::maximally_mixed())) < 1e-12);
  CHECK(std::abs(negativity(werner(1.0 / 3.0))) < 1e-9);
  // Werner spectrum: one PT eigenvalue (1 − 3p)/4.
  CHECK(negativity(werner(0.8)) == doctest::Approx((3 * 0.8 - 1) / 4).epsilon(1e-12));
  for (cplx c : {cplx(0.3, 0.0), cplx(0.1, -0.4), std::polar(0.9, 2.0)})
    CHECK(negativity(coherent_mixture(c)) == doctest::Approx(std::abs(c) / 2).epsilon(1e-12));
  for (double theta = 0.0; theta < 6.3; theta += 0.5)
    CHECK(negativity(ket_to_density(TwoPhotonKet(s2, 0, 0, std::polar(s2, theta)))) ==
          doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("negativity vanishes on product states and is local-unitary invariant") {
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 100; ++trial) {
    const JonesVector a = JonesVector{cplx(n(gen), n(gen)), cplx(n(gen), n(gen))}.normalized();
    const JonesVector b = JonesVector{cplx(n(gen), n(gen)), cplx(n(gen), n(gen))}.normalized();
    CHECK(negativity(ket_to_density(tensor(a, b))) < 1e-9);
  }
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix4c rho = trial % 2 ? oracle::random_density(gen, 1) : oracle::random_density(gen, 2);
    const Matrix4c u = oracle::kron(oracle::random_unitary2(gen), oracle::random_unitary2(gen));
    const Matrix4c rotated = u * rho * u.adjoint();
    CHECK(std::abs(negativity(DensityMatrix(rho)) - negativity(DensityMatrix(0.5 * (rotated + rotated.adjoint())))) <
          1e-9);
  }
}

TEST_CASE("fidelity") {
  const TwoPhotonKet phi = TwoPhotonKet::phi_plus();
  CHECK(fidelity_to(ket_to_density(phi), phi) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fidelity_to(DensityMatrix::maximally_mixed(), phi) == doctest::Approx(0.25).epsilon(1e-12));
  for (double c : {-0.5, 0.0, 0.3, 1.0})
    CHECK(fidelity_to(coherent_mixture(c), phi) == doctest::Approx((1 + c) / 2).epsilon(1e-12));
  // Global phase is invisible.
  const TwoPhotonKet rotated(phi.amplitudes() * std::polar(1.0, 1.1));
  CHECK(fidelity_to(rotated, phi) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("check_physical diagnostics") {
  const Matrix4c phi = ket_to_density(TwoPhotonKet::phi_plus()).matrix();
  CHECK(check_physical(phi, 1e-9).physical);

  Matrix4c heavy = phi * 1.1;
  const PhysicalityReport r = check_physical(heavy, 1e-9);
  CHECK_FALSE(r.physical);
  CHECK(r.trace_deviation == doctest::Approx(0.1).epsilon(1e-9));

  Matrix4c neg = Matrix4c::Zero();
  neg.diagonal() << 0.51, 0.25, 0.25, -0.01;
  const PhysicalityReport rn = check_physical(neg, 1e-9);
  CHECK_FALSE(rn.physical);
  CHECK(rn.min_eigenvalue == doctest::Approx(-0.01).epsilon(1e-12));
  CHECK_THROWS_AS(DensityMatrix{neg}, std::invalid_argument);

  Matrix4c skew = phi;
  skew(0, 1) = 0.1;
  CHECK_FALSE(check_physical(skew, 1e-9).physical);
}

TEST_CASE("trace distance and projection") {
  const Matrix4c phi = ket_to_density(TwoPhotonKet::phi_plus()).matrix();
  CHECK(std::abs(trace_distance(phi, phi)) < 1e-15);
  CHECK(trace_distance(phi, 0.25 * Matrix4c::Identity()) == doctest::Approx(0.75).epsilon(1e-12));

  Matrix4c bad = phi;
  bad(1, 1) = -0.1;
  bad(2, 2) = 0.1;
  const DensityMatrix p = project_to_physical(bad);
  CHECK(check_physical(p.matrix(), 1e-10).physical);
}

TEST_CASE("density record round-trip") {
  std::mt19937_64 gen(3);
  const DensityMatrix rho(oracle::random_density(gen));
  std::stringstream ss;
  write_density_record(ss, rho);
  const std::string text = ss.str();
  CHECK(text.find("HH HV VH VV") != std::string::npos);
  const DensityMatrix back = read_density_record(ss);
  CHECK((back.matrix() - rho.matrix()).cwiseAbs().maxCoeff() < 1e-14);

  std::stringstream broken("density_matrix v1\nbasis HH HV VH VV\n0 0 1.0\n");
  CHECK_THROWS(read_density_record(broken));
}
