#include "dpm/tomography.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dpm/errors.hpp"
#include "dpm/rng.hpp"

namespace dpm {

std::vector<ProjectionSetting> standard_settings() {
  std::vector<ProjectionSetting> out;
  out.reserve(36);
  for (Polarization a : kPolarizations)
    for (Polarization b : kPolarizations) out.push_back({a, b});
  return out;
}

AnalyzerModel AnalyzerModel::ideal() {
  AnalyzerModel m;
  for (int k = 0; k < 6; ++k) m.xx[k] = m.x[k] = basis_vector(static_cast<Polarization>(k));
  return m;
}

namespace {

std::array<JonesVector, 6> perturbed_basis(const std::array<double, 3>& d) {
  constexpr double q = 0.78539816339744830962;  // π/4
  const cplx i(0.0, 1.0);
  std::array<JonesVector, 6> b;
  b[0] = {std::cos(d[0]), std::sin(d[0])};
  b[1] = {-std::sin(d[0]), std::cos(d[0])};
  b[2] = {std::cos(q + d[1]), std::sin(q + d[1])};
  b[3] = {std::cos(-q + d[1]), std::sin(-q + d[1])};
  b[4] = {std::cos(q + d[2]), -i * std::sin(q + d[2])};
  b[5] = {std::sin(q + d[2]), i * std::cos(q + d[2])};
  return b;
}

}  // namespace

AnalyzerModel AnalyzerModel::perturbed(const std::array<double, 3>& xx_deltas_rad,
                                       const std::array<double, 3>& x_deltas_rad) {
  return {perturbed_basis(xx_deltas_rad), perturbed_basis(x_deltas_rad)};
}

void MleConfig::validate() const {
  if (max_iterations <= 0) throw ConfigError("mle.max_iterations", "must be positive");
  if (!(gradient_tolerance > 0.0)) throw ConfigError("mle.gradient_tolerance", "must be positive");
  if (!(probability_floor > 0.0)) throw ConfigError("mle.probability_floor", "must be positive");
}

std::vector<CountRecord> canonical_records(std::span<const CountRecord> records) {
  std::array<int, 36> seen{};
  std::vector<CountRecord> out(36);
  for (const CountRecord& r : records) {
    const int k = r.setting.index();
    if (seen[k]++) throw std::invalid_argument("duplicate count record for setting " + r.setting.label());
    if (!(r.exposure > 0.0)) throw std::invalid_argument("non-positive exposure for setting " + r.setting.label());
    out[k] = r;
  }
  std::string missing;
  for (int k = 0; k < 36; ++k)
    if (!seen[k]) missing += (missing.empty() ? "" : ", ") + ProjectionSetting::from_index(k).label();
  if (!missing.empty()) throw std::invalid_argument("missing projection settings: " + missing);
  return out;
}

Matrix4c stokes_linear_inversion(std::span<const CountRecord> input) {
  const std::vector<CountRecord> rec = canonical_records(input);
  // Pauli axis -> (+1 label, −1 label); axis 0 is the identity.
  constexpr Polarization plus[4] = {Polarization::H, Polarization::D, Polarization::L, Polarization::H};
  constexpr Polarization minus[4] = {Polarization::V, Polarization::A, Polarization::R, Polarization::V};
  auto rate = [&](Polarization a, Polarization b) {
    const CountRecord& r = rec[ProjectionSetting{a, b}.index()];
    return static_cast<double>(r.count) / r.exposure;
  };

  // P[i][j][sa][sb]: normalized outcome frequencies for local axes i, j in {1,2,3}.
  double P[4][4][2][2] = {};
  for (int i = 1; i < 4; ++i)
    for (int j = 1; j < 4; ++j) {
      const Polarization la[2] = {plus[i], minus[i]}, lb[2] = {plus[j], minus[j]};
      double tot = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) tot += (P[i][j][a][b] = rate(la[a], lb[b]));
      if (!(tot > 0.0))
        throw std::invalid_argument(std::string("zero total counts in basis pair ") + to_char(plus[i]) + to_char(minus[i]) +
                                    "/" + to_char(plus[j]) + to_char(minus[j]));
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) P[i][j][a][b] /= tot;
    }

  double S[4][4] = {};
  S[0][0] = 1.0;
  for (int i = 1; i < 4; ++i)
    for (int j = 1; j < 4; ++j) {
      const auto& p = P[i][j];
      S[i][j] = p[0][0] - p[0][1] - p[1][0] + p[1][1];
      S[i][0] += (p[0][0] + p[0][1] - p[1][0] - p[1][1]) / 3.0;
      S[0][j] += (p[0][0] + p[1][0] - p[0][1] - p[1][1]) / 3.0;
    }

  std::array<Matrix2c, 4> sigma;
  const cplx I(0.0, 1.0);
  sigma[0] << 1, 0, 0, 1;
  sigma[1] << 0, 1, 1, 0;
  sigma[2] << 0, -I, I, 0;
  sigma[3] << 1, 0, 0, -1;
  Matrix4c rho = Matrix4c::Zero();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (S[i][j] == 0.0) continue;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          for (int c = 0; c < 2; ++c)
            for (int d = 0; d < 2; ++d) rho(2 * a + b, 2 * c + d) += 0.25 * S[i][j] * sigma[i](a, c) * sigma[j](b, d);
    }
  return 0.5 * (rho + rho.adjoint());
}

double log_likelihood(std::span<const CountRecord> input, const DensityMatrix& rho, const AnalyzerModel& analyzers,
                      double probability_floor) {
  const std::vector<CountRecord> rec = canonical_records(input);
  double n_tot = 0.0, expected = 0.0;
  std::array<double, 36> p{};
  for (int k = 0; k < 36; ++k) {
    const ProjectionSetting s = rec[k].setting;
    p[k] = std::max(0.0, born_probability(rho, analyzers.xx[static_cast<int>(s.xx)], analyzers.x[static_cast<int>(s.x)]));
    n_tot += static_cast<double>(rec[k].count);
    expected += rec[k].exposure * p[k];
  }
  const double rate = expected > 0.0 ? n_tot / expected : 0.0;
  double ll = 0.0;
  for (int k = 0; k < 36; ++k) {
    const double mu = rate * rec[k].exposure * p[k] + probability_floor * rec[k].exposure;
    ll += static_cast<double>(rec[k].count) * std::log(mu) - mu;
  }
  return ll;
}

void write_count_csv(std::ostream& os, std::span<const CountRecord> records) {
  const auto prec = os.precision();
  os << std::setprecision(17) << "setting_xx,setting_x,count,exposure\n";
  for (const CountRecord& r : records)
    os << to_char(r.setting.xx) << ',' << to_char(r.setting.x) << ',' << r.count << ',' << r.exposure << '\n';
  os.precision(prec);
}

std::vector<CountRecord> read_count_csv(std::istream& is, const std::string& source) {
  std::string line;
  int lineno = 0;
  std::vector<CountRecord> out;
  if (!std::getline(is, line)) throw ParseError(source, 1, "empty file");
  ++lineno;
  if (line != "setting_xx,setting_x,count,exposure") throw ParseError(source, lineno, "unexpected header '" + line + "'");
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string a, b, c, e;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c, ',') || !std::getline(ls, e))
      throw ParseError(source, lineno, "expected four comma-separated fields");
    CountRecord r;
    try {
      if (a.size() != 1 || b.size() != 1) throw std::invalid_argument("setting labels must be single letters");
      r.setting = {polarization_from_char(a[0]), polarization_from_char(b[0])};
      std::size_t used = 0;
      const long long cnt = std::stoll(c, &used);
      if (used != c.size() || cnt < 0) throw std::invalid_argument("count must be a non-negative integer");
      r.count = static_cast<std::uint64_t>(cnt);
      r.exposure = std::stod(e, &used);
      if (used != e.size() || !(r.exposure > 0.0)) throw std::invalid_argument("exposure must be positive");
    } catch (const std::exception& ex) {
      throw ParseError(source, lineno, ex.what());
    }
    out.push_back(r);
  }
  return out;
}

void write_tomography_result(std::ostream& os, const TomographyResult& result) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << "tomography_result v1\n";
  write_density_record(os, result.rho);
  os << std::scientific << std::setprecision(15);
  os << "log_likelihood " << result.log_likelihood << '\n';
  os << "iterations " << result.iterations << '\n';
  os << "converged " << (result.converged ? 1 : 0) << '\n';
  os << "gradient_norm " << result.gradient_norm << '\n';
  os << "negativity " << negativity(result.rho) << '\n';
  os << "fidelity_phi_plus " << fidelity_to(result.rho, TwoPhotonKet::phi_plus()) << '\n';
  if (result.uncertainties) {
    const Uncertainties& u = *result.uncertainties;
    os << "negativity_std " << u.negativity_std << '\n';
    os << "resamples_used " << u.resamples_used << '\n';
    os << "resamples_failed " << u.resamples_failed << '\n';
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) os << "element_std " << r << ' ' << c << ' ' << u.real_std(r, c) << ' ' << u.imag_std(r, c) << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

TomographyResult read_tomography_result(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "tomography_result v1")
    throw std::runtime_error("tomography result: missing 'tomography_result v1' header");
  TomographyResult r;
  r.rho = read_density_record(is);
  Uncertainties u;
  bool have_u = false;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "log_likelihood") ls >> r.log_likelihood;
    else if (key == "iterations") ls >> r.iterations;
    else if (key == "converged") { int c = 0; ls >> c; r.converged = c != 0; }
    else if (key == "gradient_norm") ls >> r.gradient_norm;
    else if (key == "negativity_std") { ls >> u.negativity_std; have_u = true; }
    else if (key == "resamples_used") ls >> u.resamples_used;
    else if (key == "resamples_failed") ls >> u.resamples_failed;
    else if (key == "element_std") {
      int row = 0, col = 0;
      double re = 0, im = 0;
      ls >> row >> col >> re >> im;
      if (row >= 0 && row < 4 && col >= 0 && col < 4) {
        u.real_std(row, col) = re;
        u.imag_std(row, col) = im;
      }
    }
    if (ls.fail()) throw std::runtime_error("tomography result: malformed line '" + line + "'");
  }
  if (have_u) r.uncertainties = u;
  return r;
}

}  // namespace dpm
