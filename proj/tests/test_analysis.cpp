#include <doctest.h>

#include <random>
#include <sstream>

#include "dpm/analysis.hpp"
#include "dpm/simulate.hpp"
#include "dpm/tomography.hpp"
#include "dpm/waveform.hpp"
#include "oracles.hpp"

using namespace dpm;

namespace {

const EmitterParams kEmitter{};

CoincidenceMap random_map(std::uint64_t seed, const std::string& label = "HH") {
  SimulationSpec spec;
  return simulate_setting(spec, ProjectionSetting::from_label(label), 20000, seed);
}

struct Synthetic {
  std::vector<double> x, y, sigma;
};

Synthetic synthetic(double period, double visibility, double phase, double tau = 405.0, double offset = 2.0) {
  Synthetic s;
  for (double x = 0.0; x < 3000.0; x += 16.0) {
    s.x.push_back(x);
    s.y.push_back(1000.0 * std::exp(-x / tau) * (1.0 + visibility * std::cos(2 * oracle::kPi * x / period + phase)) +
                  offset);
    s.sigma.push_back(1.0);
  }
  return s;
}

double wrap(double a) { return std::remainder(a, 2 * oracle::kPi); }

}  // namespace

TEST_CASE("window selection") {
  const CoincidenceMap m = random_map(1);
  const double axis = m.geometry().axis_range_ps;
  CHECK(window_counts(m, {axis, 0.0}).total == m.total());

  // Mode of the arrival distribution sits in the first bin on both axes for
  // an exponential cascade; a one-bin window returns exactly that bin.
  int bi = 0, bj = 0;
  for (int i = 0; i < m.bins(); ++i)
    for (int j = 0; j < m.bins(); ++j)
      if (m.at(i, j) > m.at(bi, bj)) bi = i, bj = j;
  if (bi == bj) {
    const double w = m.bin_width_ps();
    CHECK(window_counts(m, {w, bi * w}).total == m.at(bi, bj));
  }
  const double w = m.bin_width_ps();
  CHECK(window_counts(m, {w, 0.0}).total == m.at(0, 0));

  std::uint64_t prev = m.total();
  for (double t = 4096.0; t >= 16.0; t /= 2.0) {
    const std::uint64_t n = window_counts(m, {t, 0.0}).total;
    CHECK(n <= prev);
    prev = n;
  }

  // Bin-center rule: a 24 ps window holds bin 0 (center 8) but not bin 1
  // (center 24, on the open edge); 25 ps takes both.
  const WindowedCounts a = window_counts(m, {24.0, 0.0});
  CHECK(a.first_bin == 0);
  CHECK(a.last_bin == 0);
  CHECK(a.effective_width_ps == 16.0);
  const WindowedCounts b = window_counts(m, {25.0, 0.0});
  CHECK(b.last_bin == 1);
  CHECK(b.effective_width_ps == 32.0);
  const WindowedCounts c = window_counts(m, {250.0, 0.0});
  CHECK(c.effective_width_ps == 256.0);
  // [10, 50) holds the centers 24 and 40 but not 8.
  const WindowedCounts d = window_counts(m, {40.0, 10.0});
  CHECK(d.first_bin == 1);
  CHECK(d.last_bin == 2);
  CHECK(d.effective_origin_ps == 16.0);

  CHECK_THROWS_AS(window_counts(m, {8.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(window_counts(m, {0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(window_counts(m, {5000.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(window_counts(m, {100.0, 4050.0}), std::invalid_argument);

  const CoincidenceMap sub = window_submap(m, {500.0, 0.0});
  CHECK(sub.total() == window_counts(m, {500.0, 0.0}).total);
}

TEST_CASE("diagonal profile") {
  CoincidenceMap m(ProjectionSetting::from_label("RR"), MapGeometry{});
  m.add(10 * 16.0 + 1.0, 40 * 16.0 + 1.0);
  const DeltaTProfile p = diagonal_profile(m);
  CHECK(p.total() == 1);
  CHECK(p.counts.at(30) == 1);
  CHECK(p.negative_counts == 0);

  m.add(40 * 16.0, 10 * 16.0);
  CHECK(diagonal_profile(m).negative_counts == 1);

  const CoincidenceMap r = random_map(2, "DA");
  const DeltaTProfile q = diagonal_profile(r);
  CHECK(q.total() + q.negative_counts == r.total());
  CHECK(q.bin_width_ps == 16.0);
  CHECK(q.setting == r.setting());
}

TEST_CASE("oscillation fit on synthetic profiles") {
  const Synthetic s = synthetic(470.0, 0.8, 0.3);
  const OscillationFit f = fit_oscillation(s.x, s.y, s.sigma);
  CHECK(f.converged);
  CHECK(std::abs(f.period_ps - 470.0) < 1.0);
  CHECK(f.visibility == doctest::Approx(0.8).epsilon(1e-4));
  CHECK(std::abs(wrap(f.phase_rad - 0.3)) < 1e-3);
  CHECK(f.decay_ps == doctest::Approx(405.0).epsilon(1e-4));

  for (double period : {200.0, 470.0, 1000.0}) {
    const Synthetic t = synthetic(period, 0.6, -1.0);
    CHECK(std::abs(fit_oscillation(t.x, t.y, t.sigma).period_ps / period - 1.0) < 0.01);
  }

  const Synthetic flat = synthetic(470.0, 0.0, 0.0);
  const OscillationFit g = fit_oscillation(flat.x, flat.y, flat.sigma);
  CHECK(g.visibility < 0.02);
  CHECK(g.visibility >= 0.0);

  std::vector<double> few(7, 1.0);
  CHECK_THROWS_AS(fit_oscillation(few, few, few), std::invalid_argument);

  // Trend plus damped oscillation, as followed by the negativity curve.
  std::vector<double> x, y, sig;
  for (double t = 100.0; t <= 3000.0; t += 50.0) {
    x.push_back(t);
    y.push_back(0.09 + 0.3 * std::exp(-t / 300.0) + 0.05 * std::exp(-t / 800.0) * std::cos(2 * oracle::kPi * t / 470.0 + 0.4));
    sig.push_back(1e-3);
  }
  const TrendOscillationFit tf = fit_trend_oscillation(x, y, sig);
  CHECK(tf.converged);
  CHECK(std::abs(tf.period_ps / 470.0 - 1.0) < 0.01);
}

TEST_CASE("simulated profiles: RR shape and the π/2 phase sequence") {
  SimulationSpec spec;
  std::vector<double> phases;
  for (const char* label : {"LR", "DR", "RR", "AR"}) {
    const CoincidenceMap m = simulate_setting(spec, ProjectionSetting::from_label(label), 1000000, 8);
    const OscillationFit f = fit_oscillation(diagonal_profile(m));
    CHECK(std::abs(f.period_ps / kEmitter.precession_period_ps() - 1.0) < 0.02);
    phases.push_back(f.phase_rad);
    if (std::string(label) == "RR") {
      // (1 − cos ω_X Δt)/4 times the exponential: full visibility, phase π.
      CHECK(f.visibility > 0.9);
      CHECK(std::abs(wrap(f.phase_rad - oracle::kPi)) < 0.1);
      CHECK(f.decay_ps == doctest::Approx(kEmitter.tau_x_ps).epsilon(0.05));
    }
  }
  for (std::size_t k = 1; k < phases.size(); ++k)
    CHECK(std::abs(std::abs(wrap(phases[k] - phases[k - 1])) - oracle::kPi / 2) < 0.1);

  const CoincidenceMap hh = simulate_setting(spec, ProjectionSetting::from_label("HH"), 1000000, 8);
  CHECK(fit_oscillation(diagonal_profile(hh)).visibility < 0.02);
}

TEST_CASE("oracle density matrix") {
  const double tp = kEmitter.precession_period_ps();
  const double w_tau = kEmitter.omega_x() * kEmitter.tau_x_ps;
  CHECK(w_tau == doctest::Approx(2 * oracle::kPi * 405.0 / tp).epsilon(1e-12));

  for (double width : {96.0, 1000.0, 3000.0}) {
    const DensityMatrix on = oracle_rho(kEmitter, {width, 0.0}, true, 0.0);
    CHECK(negativity(on) == doctest::Approx(0.5).epsilon(1e-12));
  }

  // Δt mode, unbounded window.
  const double inf = std::numeric_limits<double>::infinity();
  const cplx c_inf = oracle_coherence(kEmitter, {inf, 0.0}, false, 0.0, WindowMode::delta_t);
  CHECK(std::abs(std::abs(c_inf) - 1.0 / std::sqrt(1.0 + w_tau * w_tau)) < 1e-9);
  CHECK(std::abs(c_inf - oracle::delta_t_coherence(kEmitter.tau_x_ps, kEmitter.omega_x(), inf)) < 1e-9);
  CHECK(negativity(oracle_rho(kEmitter, {inf, 0.0}, false, 0.0, WindowMode::delta_t)) ==
        doctest::Approx(0.0908).epsilon(1e-3));

  for (double width : {tp / 2, 96.0, 1000.0, 3000.0}) {
    const cplx c = oracle_coherence(kEmitter, {width, 0.0}, false, 0.0, WindowMode::delta_t);
    CHECK(std::abs(c - oracle::delta_t_coherence(kEmitter.tau_x_ps, kEmitter.omega_x(), width)) < 1e-9);
  }

  for (double width : {16.0, 96.0, 250.0, 470.0, 1000.0, 3000.0}) {
    const cplx c = oracle_coherence(kEmitter, {width, 0.0}, false);
    const cplx ref = oracle::pulse_window_coherence(kEmitter.tau_xx_ps, kEmitter.tau_x_ps, kEmitter.omega_x(), width);
    CHECK(std::abs(c - ref) < 1e-9);
    const DensityMatrix rho = oracle_rho(kEmitter, {width, 0.0}, false);
    CHECK(rho(0, 0) == cplx(0.5, 0.0));
    CHECK(rho(3, 3) == cplx(0.5, 0.0));
    CHECK(rho(1, 1) == cplx(0.0, 0.0));
    CHECK(rho(2, 2) == cplx(0.0, 0.0));
    CHECK(rho(0, 3) == c / 2.0);
  }
  CHECK(negativity(oracle_rho(kEmitter, {16.0, 0.0}, false)) > 0.49);

  // Residual slope error: coherence shrinks as |e| grows.
  for (double width : {500.0, 1000.0, 3000.0}) {
    double prev = 2.0;
    for (double e : {0.0, 0.01, 0.05, 0.1}) {
      const double mag = std::abs(oracle_coherence(kEmitter, {width, 0.0}, true, e));
      CHECK(mag <= prev + 1e-12);
      CHECK(std::abs(std::abs(oracle_coherence(kEmitter, {width, 0.0}, true, -e)) - mag) < 1e-12);
      prev = mag;
    }
  }
}

TEST_CASE("negativity sweep") {
  SimulationSpec spec;
  spec.waveform = ideal_compensation_waveform(spec.emitter, spec.setup);
  // Few enough pulses that the one-bin window falls under 100 counts.
  const std::vector<CoincidenceMap> maps = simulate_all_settings(spec, 4000, 4);
  const std::vector<TimeWindow> windows = {{1000.0, 0.0}, {16.0, 0.0}, {250.0, 0.0}};
  const NegativityCurve curve = negativity_vs_window(maps, windows, {}, true);
  REQUIRE(curve.points.size() == 3);
  CHECK(curve.dpm);
  for (std::size_t k = 0; k < 3; ++k) CHECK(curve.points[k].t_w_ps == windows[k].width_ps);
  CHECK(curve.points[1].low_statistics);
  CHECK_FALSE(curve.points[0].low_statistics);
  CHECK(curve.points[2].effective_width_ps == 256.0);
  for (const CurvePoint& p : curve.points) {
    CHECK(p.negativity >= 0.0);
    CHECK(p.negativity <= 0.5 + 1e-9);
  }

  // Matches a direct reconstruction of the same windowed records.
  const TomographyResult direct = mle_reconstruct(windowed_records(maps, windows[0]));
  CHECK(curve.points[0].negativity == negativity(direct.rho));
  for (const CountRecord& r : windowed_records(maps, windows[0])) CHECK(r.exposure == 4000.0);

  std::vector<CoincidenceMap> missing(maps.begin(), maps.end() - 1);
  CHECK_THROWS_AS(negativity_vs_window(missing, windows, {}, true), std::invalid_argument);

  std::ostringstream os;
  write_curve_csv(os, curve, 4, "pulse_referenced");
  const std::string csv = os.str();
  CHECK(csv.find("# dpm=1") != std::string::npos);
  CHECK(csv.find("# seed=4") != std::string::npos);
  CHECK(csv.find("# window_origin_mode=pulse_referenced") != std::string::npos);
  CHECK(csv.find("t_w_ps,effective_width_ps,negativity,uncertainty,total_counts,low_statistics,converged") !=
        std::string::npos);

  std::ostringstream ps;
  write_profile_csv(ps, diagonal_profile(maps[0]), true, 4);
  const std::string prof = ps.str();
  CHECK(prof.find("# setting=HH") != std::string::npos);
  CHECK(prof.find("# bin_width_ps=16") != std::string::npos);
  CHECK(prof.find("delta_t_ps,count") != std::string::npos);
}
