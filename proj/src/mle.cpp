#include <cmath>
#include <random>
#include <stdexcept>

#include <ceres/ceres.h>

#include "dpm/rng.hpp"
#include "dpm/tomography.hpp"

namespace dpm {

namespace {

constexpr int kParams = 16;
using ParamVector = Eigen::Matrix<double, kParams, 1>;
using ParamMatrix = Eigen::Matrix<double, kParams, kParams>;
// Strictly lower off-diagonal positions, in parameter order after the 4 diagonals.
constexpr int kLower[6][2] = {{1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}, {3, 2}};

Matrix4c unpack(const double* x) {
  Matrix4c t = Matrix4c::Zero();
  for (int i = 0; i < 4; ++i) t(i, i) = x[i];
  for (int k = 0; k < 6; ++k) t(kLower[k][0], kLower[k][1]) = cplx(x[4 + 2 * k], x[5 + 2 * k]);
  return t;
}

void pack(const Matrix4c& t, double* x) {
  for (int i = 0; i < 4; ++i) x[i] = t(i, i).real();
  for (int k = 0; k < 6; ++k) {
    const cplx v = t(kLower[k][0], kLower[k][1]);
    x[4 + 2 * k] = v.real();
    x[5 + 2 * k] = v.imag();
  }
}

/// Lower-triangular T with T†T = rho, valid for rank-deficient rho.
Matrix4c lower_factor(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(rho.matrix());
  const Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix4c b = ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();  // b†b = rho
  // QR of the index-reversed matrix, reversed back, is lower-triangular.
  const Matrix4c rev = b.colwise().reverse().rowwise().reverse();
  Eigen::HouseholderQR<Matrix4c> qr(rev);
  const Matrix4c r = qr.matrixQR().triangularView<Eigen::Upper>();
  return r.colwise().reverse().rowwise().reverse();
}

/// x − log(1+x), accurate near 0.
double poisson_excess(double d) {
  if (std::abs(d) < 1e-4) return d * d * (0.5 - d * (1.0 / 3.0 - d * 0.25));
  return d - std::log1p(d);
}

/// Count-normalized Poisson deviance over the Cholesky parameters:
///   f = (1/N) Σ_k [ μ_k − n_k − n_k log(μ_k/n_k) ],
///   μ_k = s·E_k·‖T v_k‖² + floor·E_k.
/// Minimizing f maximizes the Poisson log-likelihood; the overall rate is
/// carried by tr(T†T).
class PoissonDeviance final : public ceres::FirstOrderFunction {
 public:
  PoissonDeviance(const std::vector<CountRecord>& rec, const AnalyzerModel& an, double scale, double floor)
      : scale_(scale) {
    for (int k = 0; k < 36; ++k) {
      const ProjectionSetting s = rec[k].setting;
      const JonesVector a = an.xx[static_cast<int>(s.xx)], b = an.x[static_cast<int>(s.x)];
      v_[k] = Vector4c(a.h * b.h, a.h * b.v, a.v * b.h, a.v * b.v);
      n_[k] = static_cast<double>(rec[k].count);
      e_[k] = rec[k].exposure;
      floor_[k] = floor * rec[k].exposure;
      n_tot_ += n_[k];
      // q_k = ‖T v_k‖² = xᵀ Q_k x with Q_k = Re(B†B), w = T v_k = B x.
      Eigen::Matrix<cplx, 4, kParams> bm = Eigen::Matrix<cplx, 4, kParams>::Zero();
      for (int i = 0; i < 4; ++i) bm(i, i) = v_[k](i);
      for (int m = 0; m < 6; ++m) {
        bm(kLower[m][0], 4 + 2 * m) = v_[k](kLower[m][1]);
        bm(kLower[m][0], 5 + 2 * m) = cplx(0.0, 1.0) * v_[k](kLower[m][1]);
      }
      q_[k] = (bm.adjoint() * bm).real();
    }
  }

  int NumParameters() const override { return kParams; }

  bool Evaluate(const double* x, double* cost, double* gradient) const override {
    const Matrix4c t = unpack(x);
    double f = 0.0;
    if (gradient) std::fill(gradient, gradient + kParams, 0.0);
    for (int k = 0; k < 36; ++k) {
      const Vector4c w = t * v_[k];
      const double q = w.squaredNorm();
      const double mu = scale_ * e_[k] * q + floor_[k];
      f += n_[k] > 0.0 ? n_[k] * poisson_excess(mu / n_[k] - 1.0) : mu;
      if (!gradient) continue;
      const double coef = (1.0 - n_[k] / mu) * scale_ * e_[k] / n_tot_;
      // dq/dRe T_ij = 2 Re(conj(w_i) v_j), dq/dIm T_ij = −2 Im(conj(w_i) v_j).
      for (int i = 0; i < 4; ++i) gradient[i] += coef * 2.0 * (std::conj(w(i)) * v_[k](i)).real();
      for (int m = 0; m < 6; ++m) {
        const cplx z = std::conj(w(kLower[m][0])) * v_[k](kLower[m][1]);
        gradient[4 + 2 * m] += coef * 2.0 * z.real();
        gradient[5 + 2 * m] -= coef * 2.0 * z.imag();
      }
    }
    *cost = f / n_tot_;
    return std::isfinite(*cost);
  }

  double total_counts() const { return n_tot_; }

  /// Exact gradient and Hessian of the objective.
  void second_order(const double* xp, ParamVector& grad, ParamMatrix& hess) const {
    const Eigen::Map<const ParamVector> x(xp);
    grad.setZero();
    hess.setZero();
    for (int k = 0; k < 36; ++k) {
      const ParamVector dq = 2.0 * q_[k] * x;
      const double a = scale_ * e_[k];
      const double mu = a * 0.5 * x.dot(dq) + floor_[k];
      grad += (1.0 - n_[k] / mu) * a * dq;
      hess += (1.0 - n_[k] / mu) * 2.0 * a * q_[k] + (n_[k] / (mu * mu)) * a * a * dq * dq.transpose();
    }
    grad /= n_tot_;
    hess /= n_tot_;
  }

 private:
  std::array<ParamMatrix, 36> q_;
  std::array<Vector4c, 36> v_;
  std::array<double, 36> n_{}, e_{}, floor_{};
  double n_tot_ = 0.0;
  double scale_;
};

class TraceCallback final : public ceres::IterationCallback {
 public:
  TraceCallback(std::vector<double>* trace, double n_tot) : trace_(trace), n_tot_(n_tot) {}
  ceres::CallbackReturnType operator()(const ceres::IterationSummary& s) override {
    if (s.step_is_successful) trace_->push_back(-s.cost * n_tot_);
    return ceres::SOLVER_CONTINUE;
  }

 private:
  std::vector<double>* trace_;
  double n_tot_;
};

}  // namespace

double cholesky_objective(std::span<const CountRecord> records, const std::array<double, kParams>& x,
                          std::array<double, kParams>* gradient, double scale, double probability_floor) {
  const PoissonDeviance fn(canonical_records(records), AnalyzerModel::ideal(), scale, probability_floor);
  double cost = 0.0;
  fn.Evaluate(x.data(), &cost, gradient ? gradient->data() : nullptr);
  return cost;
}

TomographyResult mle_reconstruct(std::span<const CountRecord> input, const MleConfig& config,
                                 const AnalyzerModel& analyzers) {
  config.validate();
  const std::vector<CountRecord> rec = canonical_records(input);
  double n_tot = 0.0;
  for (const CountRecord& r : rec) n_tot += static_cast<double>(r.count);
  if (!(n_tot > 0.0)) throw std::invalid_argument("mle_reconstruct: all counts are zero");

  DensityMatrix start = DensityMatrix::maximally_mixed();
  if (config.init == MleInit::linear_inversion) {
    try {
      start = project_to_physical(stokes_linear_inversion(rec));
    } catch (const std::invalid_argument&) {
      start = DensityMatrix::maximally_mixed();
    }
  }
  double expected = 0.0;
  for (const CountRecord& r : rec)
    expected += r.exposure * born_probability(start, analyzers.xx[static_cast<int>(r.setting.xx)],
                                              analyzers.x[static_cast<int>(r.setting.x)]);
  if (!(expected > 1e-12 * n_tot)) {
    start = DensityMatrix::maximally_mixed();
    expected = 0.0;
    for (const CountRecord& r : rec) expected += 0.25 * r.exposure;
  }
  const double scale = n_tot / expected;

  std::array<double, kParams> x{};
  pack(lower_factor(start), x.data());

  auto* fn = new PoissonDeviance(rec, analyzers, scale, config.probability_floor);
  ceres::GradientProblem problem(fn);

  TomographyResult result;
  std::vector<double> trace;
  TraceCallback callback(&trace, n_tot);

  ceres::GradientProblemSolver::Options opt;
  opt.line_search_direction_type = ceres::LBFGS;
  opt.logging_type = ceres::SILENT;
  opt.minimizer_progress_to_stdout = false;
  opt.function_tolerance = 1e-16;
  opt.parameter_tolerance = 1e-16;
  opt.gradient_tolerance = 1e-3 * config.gradient_tolerance;
  if (config.trace) {
    opt.callbacks.push_back(&callback);
    opt.update_state_every_iteration = true;
    double c0 = 0.0;
    fn->Evaluate(x.data(), &c0, nullptr);
    trace.push_back(-c0 * n_tot);
  }

  std::array<double, kParams> g{};
  double cost = 0.0;
  int used = 0;
  // L-BFGS gets the first part of the budget, restarted with fresh memory
  // while it still makes progress; the rest is left for the Newton polish.
  const int first_phase = std::max(1, std::min(config.max_iterations / 2, 400));
  for (int restart = 0; restart < 20 && used < first_phase; ++restart) {
    opt.max_num_iterations = first_phase - used;
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(opt, problem, x.data(), &summary);
    used += static_cast<int>(summary.iterations.size()) - 1;
    fn->Evaluate(x.data(), &cost, g.data());
    result.gradient_norm = Eigen::Map<Eigen::Matrix<double, kParams, 1>>(g.data()).norm();
    if (result.gradient_norm < config.gradient_tolerance) {
      result.converged = true;
      break;
    }
    if (summary.iterations.size() <= 1) break;
  }

  // Near a rank-deficient optimum L-BFGS crawls along nearly flat directions;
  // damped Newton steps with the exact Hessian finish the job.
  if (!result.converged) {
    ParamVector grad, trial_grad;
    ParamMatrix hess, unused;
    fn->second_order(x.data(), grad, hess);
    double lambda = 1e-6 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
    while (used < config.max_iterations) {
      ++used;
      const ParamVector step = (hess + lambda * ParamMatrix::Identity()).ldlt().solve(-grad);
      std::array<double, kParams> trial;
      Eigen::Map<ParamVector>(trial.data()) = Eigen::Map<const ParamVector>(x.data()) + step;
      fn->second_order(trial.data(), trial_grad, unused);
      double trial_cost = 0.0;
      fn->Evaluate(trial.data(), &trial_cost, nullptr);
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        x = trial;
        cost = trial_cost;
        grad = trial_grad;
        hess = unused;
        lambda = std::max(lambda / 4.0, 1e-15);
        if (config.trace) trace.push_back(-cost * n_tot);
      } else {
        lambda *= 8.0;
      }
      result.gradient_norm = grad.norm();
      if (result.gradient_norm < config.gradient_tolerance) {
        result.converged = true;
        break;
      }
    }
  }
  result.iterations = used;

  const Matrix4c t = unpack(x.data());
  Matrix4c m = t.adjoint() * t;
  m /= m.trace().real();
  m = 0.5 * (m + m.adjoint()).eval();
  result.rho = DensityMatrix(m, 1e-9);
  result.log_likelihood = log_likelihood(rec, result.rho, analyzers, config.probability_floor);
  result.objective_trace = std::move(trace);
  return result;
}

Uncertainties bootstrap_uncertainties(std::span<const CountRecord> input, int n_resamples, const MleConfig& config,
                                      std::uint64_t seed) {
  if (n_resamples < 100) throw std::invalid_argument("bootstrap_uncertainties: need at least 100 resamples");
  const std::vector<CountRecord> rec = canonical_records(input);

  struct Sample {
    bool ok = false;
    Matrix4c rho;
    double negativity = 0.0;
  };
  std::vector<Sample> samples(static_cast<std::size_t>(n_resamples));
  MleConfig cfg = config;
  cfg.trace = false;

#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < n_resamples; ++r) {
    CounterRng rng(seed, 0xb0075ULL, static_cast<std::uint64_t>(r));
    std::vector<CountRecord> resample = rec;
    for (CountRecord& c : resample) {
      if (c.count == 0) continue;
      std::poisson_distribution<std::uint64_t> pois(static_cast<double>(c.count));
      c.count = pois(rng);
    }
    try {
      const TomographyResult t = mle_reconstruct(resample, cfg);
      samples[r] = {true, t.rho.matrix(), negativity(t.rho)};
    } catch (const std::exception&) {
      samples[r].ok = false;
    }
  }

  Uncertainties u;
  Matrix4c mean = Matrix4c::Zero();
  double n_mean = 0.0;
  for (const Sample& s : samples) {
    if (!s.ok) {
      ++u.resamples_failed;
      continue;
    }
    ++u.resamples_used;
    mean += s.rho;
    n_mean += s.negativity;
  }
  if (u.resamples_used < 2) throw std::runtime_error("bootstrap_uncertainties: fewer than two successful resamples");
  mean /= u.resamples_used;
  n_mean /= u.resamples_used;
  double n_var = 0.0;
  for (const Sample& s : samples) {
    if (!s.ok) continue;
    const Matrix4c d = s.rho - mean;
    u.real_std += d.real().cwiseAbs2();
    u.imag_std += d.imag().cwiseAbs2();
    n_var += (s.negativity - n_mean) * (s.negativity - n_mean);
  }
  const double denom = u.resamples_used - 1;
  u.real_std = (u.real_std / denom).cwiseSqrt();
  u.imag_std = (u.imag_std / denom).cwiseSqrt();
  u.negativity_std = std::sqrt(n_var / denom);
  return u;
}

NegativityEnvelope systematic_angle_scan(std::span<const CountRecord> input, const MleConfig& config,
                                         double angle_tolerance_deg) {
  if (angle_tolerance_deg < 0.0) throw std::invalid_argument("angle tolerance must be non-negative");
  const std::vector<CountRecord> rec = canonical_records(input);
  MleConfig cfg = config;
  cfg.trace = false;

  NegativityEnvelope env;
  env.center = negativity(mle_reconstruct(rec, cfg).rho);
  env.min = env.max = env.center;
  env.analyses = 1;
  if (angle_tolerance_deg == 0.0) return env;

  const double d = angle_tolerance_deg * 3.14159265358979323846 / 180.0;
  std::array<double, 64> values{};
#pragma omp parallel for schedule(dynamic)
  for (int corner = 0; corner < 64; ++corner) {
    std::array<double, 3> a{}, b{};
    for (int k = 0; k < 3; ++k) {
      a[k] = (corner >> k) & 1 ? d : -d;
      b[k] = (corner >> (k + 3)) & 1 ? d : -d;
    }
    values[corner] = negativity(mle_reconstruct(rec, cfg, AnalyzerModel::perturbed(a, b)).rho);
  }
  for (double v : values) {
    env.min = std::min(env.min, v);
    env.max = std::max(env.max, v);
  }
  env.analyses = 65;
  return env;
}

}  // namespace dpm
