#pragma once

// 36-setting two-photon polarization tomography: Stokes linear inversion and
// Poissonian maximum likelihood over a Cholesky-factor parametrization.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpm/qstate.hpp"

namespace dpm {

struct CountRecord {
  ProjectionSetting setting;
  std::uint64_t count = 0;
  double exposure = 1.0;  // pulses integrated for this setting
};

/// Canonical order: XX basis outer (H,V,D,A,R,L), X basis inner.
std::vector<ProjectionSetting> standard_settings();

/// Analyzer states actually used for each label, per photon. The default is
/// the ideal basis; the angle scan perturbs it.
struct AnalyzerModel {
  std::array<JonesVector, 6> xx;
  std::array<JonesVector, 6> x;

  static AnalyzerModel ideal();
  /// Linear analyzers rotated by the given angle, circular ones given the same
  /// ellipticity error: H/V by delta_hv, D/A by delta_da, R/L by delta_rl.
  static AnalyzerModel perturbed(const std::array<double, 3>& xx_deltas_rad, const std::array<double, 3>& x_deltas_rad);
};

/// Orders records canonically; throws std::invalid_argument naming missing or
/// duplicated settings, or non-positive exposures.
std::vector<CountRecord> canonical_records(std::span<const CountRecord> records);

/// ρ = (1/4) Σ S_ij σ_i⊗σ_j from basis-resolved frequencies. Hermitian and
/// unit-trace by construction, not necessarily PSD.
Matrix4c stokes_linear_inversion(std::span<const CountRecord> records);

enum class MleInit { linear_inversion, maximally_mixed };

struct MleConfig {
  int max_iterations = 5000;
  /// On the gradient of the count-normalized log-likelihood w.r.t. the
  /// 16 Cholesky parameters.
  double gradient_tolerance = 1e-9;
  MleInit init = MleInit::linear_inversion;
  /// μ_k ≥ floor·exposure_k keeps log μ finite for zero-probability settings.
  double probability_floor = 1e-12;
  /// Record the objective at every accepted iteration.
  bool trace = false;

  void validate() const;
};

struct Uncertainties {
  Eigen::Matrix4d real_std = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d imag_std = Eigen::Matrix4d::Zero();
  double negativity_std = 0.0;
  int resamples_used = 0;
  int resamples_failed = 0;
  double failure_fraction() const {
    const int n = resamples_used + resamples_failed;
    return n > 0 ? static_cast<double>(resamples_failed) / n : 0.0;
  }
};

struct TomographyResult {
  DensityMatrix rho;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  std::vector<double> objective_trace;  // log-likelihood per accepted iteration when traced
  std::optional<Uncertainties> uncertainties;
};

/// Σ n_k log μ_k − μ_k with μ_k = A·exposure_k·tr(ρΠ_k) (+floor), the overall
/// rate A profiled out at its optimum.
double log_likelihood(std::span<const CountRecord> records, const DensityMatrix& rho,
                      const AnalyzerModel& analyzers = AnalyzerModel::ideal(), double probability_floor = 1e-12);

/// Throws std::invalid_argument for incomplete or all-zero data. Non-convergence
/// is reported through the flag only.
TomographyResult mle_reconstruct(std::span<const CountRecord> records, const MleConfig& config = {},
                                 const AnalyzerModel& analyzers = AnalyzerModel::ideal());

/// The minimized objective on the 16 Cholesky parameters (4 real diagonals,
/// then real/imag of T(1,0), T(2,0), T(2,1), T(3,0), T(3,1), T(3,2)) with
/// rate scale `scale`; fills `gradient` when non-null. Exposed for gradient
/// checks.
double cholesky_objective(std::span<const CountRecord> records, const std::array<double, 16>& x,
                          std::array<double, 16>* gradient, double scale = 1.0, double probability_floor = 1e-12);

/// Poisson(observed) resampling; resamples run in parallel with per-resample
/// streams so the result depends only on the seed.
Uncertainties bootstrap_uncertainties(std::span<const CountRecord> records, int n_resamples, const MleConfig& config,
                                      std::uint64_t seed);

struct NegativityEnvelope {
  double center = 0.0;
  double min = 0.0;
  double max = 0.0;
  int analyses = 0;
};

/// Reconstructs under the unperturbed analyzers plus every corner of the
/// ±tolerance box over the six analyzer angles (3 bases × 2 photons): 65
/// analyses in total.
NegativityEnvelope systematic_angle_scan(std::span<const CountRecord> records, const MleConfig& config,
                                         double angle_tolerance_deg = 3.0);

/// CSV "setting_xx,setting_x,count,exposure" with a header line.
std::vector<CountRecord> read_count_csv(std::istream& is, const std::string& source);
void write_count_csv(std::ostream& os, std::span<const CountRecord> records);

/// Text record: density matrix block followed by "key value" lines.
void write_tomography_result(std::ostream& os, const TomographyResult& result);
TomographyResult read_tomography_result(std::istream& is);

}  // namespace dpm
