#include <doctest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "dpm/errors.hpp"
#include "dpm/pipeline.hpp"

using namespace dpm;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dpm_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string field_of(const json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

RunConfig small_config(const fs::path& out, bool dpm, std::uint64_t pulses = 20000) {
  json j = {{"seed", 12}, {"output_dir", out.string()}, {"simulation", {{"pulses_per_setting", pulses}}}};
  if (dpm) j["waveform"] = {{"mode", "ideal"}};
  return config_from_json(j);
}

int run_cli(const std::string& args, const fs::path& log = "/dev/null") {
  const std::string cmd = std::string(DPMSIM_PATH) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config defaults carry the physical constants") {
  const RunConfig c = config_from_json({{"seed", 1}});
  CHECK(c.emitter.tau_xx_ps == 211.0);
  CHECK(c.emitter.tau_x_ps == 405.0);
  CHECK(c.emitter.fss_microev == 8.80);
  CHECK(c.setup.delay_line_ps == 1900.0);
  CHECK(c.setup.clock_period_ps == doctest::Approx(1e6 / 76.0));
  CHECK(c.histogram.bin_width_ps == 16.0);
  CHECK_FALSE(c.dpm());
  CHECK(c.imperfections.is_ideal());
  CHECK(*c.seed == 1);
}

TEST_CASE("config validation names the offending field") {
  CHECK(field_of(json::object()) == "seed");
  CHECK(field_of({{"seed", 1}, {"emitter", {{"tau_xx", 200}}}}) == "emitter.tau_xx");
  CHECK(field_of({{"seed", 1}, {"bogus", 3}}) == "bogus");
  CHECK(field_of({{"seed", 1}, {"emitter", {{"tau_x_ps", -5}}}}) == "emitter.tau_x_ps");
  CHECK(field_of({{"seed", 1}, {"emitter", {{"tau_x_ps", "long"}}}}) == "emitter.tau_x_ps");
  CHECK(field_of({{"seed", 1}, {"setup", {{"pulses_per_cycle", 7}}}}) == "setup.pulses_per_cycle");
  CHECK(field_of({{"seed", 1}, {"analysis", {{"windows_ps", {96, 0}}}}}) == "analysis.windows_ps[1]");
  CHECK(field_of({{"seed", 1}, {"analysis", {{"bootstrap_resamples", 5}}}}) == "analysis.bootstrap_resamples");
  CHECK(field_of({{"seed", 1}, {"waveform", {{"mode", "sawtooth"}}}}) == "waveform.mode");
  CHECK(field_of({{"seed", 1}, {"imperfections", {{"extinction_epsilon", 2.0}}}}) ==
        "imperfections.extinction_epsilon");
  CHECK(field_of({{"seed", 1}, {"mle", {{"gradient_tolerance", 0}}}}) == "mle.gradient_tolerance");
  CHECK(field_of({{"seed", 1}, {"simulation", {{"pulses_per_setting", 0}}}}) == "simulation.pulses_per_setting");
  CHECK(field_of({{"seed", 1}, {"histogram", {{"bin_width_ps", -16}}}}) == "histogram.bin_width_ps");
  CHECK(field_of({{"seed", 1},
                  {"waveform",
                   {{"mode", "explicit"},
                    {"segments", {{{"start_ps", 0}, {"end_ps", 10}, {"start_phase_rad", 0}, {"slope_rad_per_ps", 0}},
                                  {{"start_ps", 5}, {"end_ps", 20}, {"start_phase_rad", 0}, {"slope_rad_per_ps", 0}}}}}}}) ==
        "waveform");
  CHECK(field_of({{"seed", 1}, {"imperfections", {{"preset", "paper-like-v1"}}}}) == "<accepted>");

  const fs::path dir = scratch("badjson");
  std::ofstream(dir / "bad.json") << "{\n  \"seed\": 1,\n  oops\n}\n";
  try {
    load_config(dir / "bad.json");
    FAIL("expected a ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("config JSON round trip") {
  json j = {{"seed", 99},
            {"waveform", {{"mode", "paper-like"}}},
            {"imperfections", {{"preset", "paper-like-v1"}}},
            {"analysis", {{"windows_ps", {96, 500}}, {"bootstrap_resamples", 100}}},
            {"mle", {{"init", "maximally_mixed"}}}};
  const RunConfig a = config_from_json(j);
  const json ja = config_to_json(a);
  CHECK(config_to_json(config_from_json(ja)) == ja);
  CHECK(a.imperfections.drift_sigma_rad == 0.05);
  CHECK(a.dpm());
}

TEST_CASE("simulate writes 36 maps and a re-executable manifest") {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b"), c = scratch("sim_c");
  const RunConfig cfg = small_config(a, true);
  const SimulateSummary s = run_simulate(cfg);
  CHECK(s.totals.size() == 36);

  const json manifest = json::parse(slurp(a / kManifestFile));
  CHECK(manifest["seed"] == 12);
  CHECK(manifest["dpm"] == true);
  CHECK(manifest["imperfection_preset"] == "none");
  const SimulationData data = load_simulation(a);
  REQUIRE(data.maps.size() == 36);
  for (const CoincidenceMap& m : data.maps) {
    CHECK(manifest["totals"][m.setting().label()] == m.total());
    CHECK(fs::exists(a / "profiles" / profile_file_name(m.setting())));
  }

  // Same config twice, and the manifest alone, reproduce every byte.
  RunConfig again = cfg;
  again.output_dir = b.string();
  run_simulate(again);
  RunConfig replay = load_config(a / kManifestFile);
  replay.output_dir = c.string();
  run_simulate(replay);
  for (const auto& entry : fs::directory_iterator(a)) {
    if (!entry.is_regular_file() || entry.path().filename() == kManifestFile) continue;
    const auto name = entry.path().filename();
    CHECK(slurp(entry.path()) == slurp(b / name));
    CHECK(slurp(entry.path()) == slurp(c / name));
  }
}

TEST_CASE("RR profiles contrast with and without the waveform") {
  const fs::path off = scratch("rr_off"), on = scratch("rr_on");
  run_simulate(small_config(off, false, 100000));
  run_simulate(small_config(on, true, 100000));
  const ProjectionSetting rr = ProjectionSetting::from_label("RR");
  const auto load_rr = [&](const fs::path& dir) {
    std::ifstream in(dir / map_file_name(rr));
    return read_coincidence_csv(in, map_file_name(rr));
  };
  const OscillationFit f_off = fit_oscillation(diagonal_profile(load_rr(off)));
  const OscillationFit f_on = fit_oscillation(diagonal_profile(load_rr(on)));
  CHECK(f_off.visibility > 0.8);
  CHECK(f_on.visibility < 0.1);
}

TEST_CASE("dataset loading errors") {
  const fs::path dir = scratch("broken");
  run_simulate(small_config(dir, false, 2000));
  fs::remove(dir / "coincidence_HV.csv");
  fs::remove(dir / "coincidence_LR.csv");
  try {
    load_simulation(dir);
    FAIL("expected missing settings");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("HV") != std::string::npos);
    CHECK(msg.find("LR") != std::string::npos);
  }

  const fs::path dir2 = scratch("corrupt");
  run_simulate(small_config(dir2, false, 2000));
  const fs::path victim = dir2 / "coincidence_DD.csv";
  std::vector<std::string> lines;
  {
    std::ifstream in(victim);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
  }
  REQUIRE(lines.size() > 10);
  lines[9] = "0,16,not-a-number";
  {
    std::ofstream out(victim, std::ios::trunc);
    for (const auto& l : lines) out << l << '\n';
  }
  try {
    load_simulation(dir2);
    FAIL("expected a ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 10);
    CHECK(e.file().find("coincidence_DD.csv") != std::string::npos);
  }
}

TEST_CASE("tomography, sweep and oracle agree with each other") {
  const fs::path dir = scratch("pipeline");
  run_simulate(small_config(dir, false, 50000));
  const SimulationData data = load_simulation(dir);
  const MleConfig mle;
  const TomographyRun one = run_tomography(data, {1000.0, 0.0}, mle, 0, 1);
  const NegativityCurve curve = run_sweep(data, {{1000.0, 0.0}}, mle, 0, 1);
  REQUIRE(curve.points.size() == 1);
  CHECK(curve.points[0].negativity == negativity(one.result.rho));
  CHECK(curve.points[0].total_counts == one.total_counts);
  CHECK_FALSE(curve.dpm);
  CHECK_THROWS_AS(run_sweep(data, {}, mle, 0, 1), std::invalid_argument);

  const auto rows = run_oracle(data.config, {{500.0, 0.0}, {1000.0, 0.0}}, WindowMode::pulse_referenced, &data, mle);
  REQUIRE(rows.size() == 2);
  for (const OracleRow& r : rows) {
    REQUIRE(r.deviation.has_value());
    CHECK(std::abs(*r.deviation) < 0.05);
  }
  CHECK(rows[1].mc_negativity.value() == negativity(one.result.rho));

  RunConfig on = data.config;
  on.waveform.mode = WaveformMode::ideal;
  for (const OracleRow& r : run_oracle(on, on.windows(), WindowMode::pulse_referenced, nullptr, mle))
    CHECK(r.oracle_negativity == doctest::Approx(0.5).epsilon(1e-12));
  const double inf = std::numeric_limits<double>::infinity();
  const auto dt = run_oracle(data.config, {{inf, 0.0}}, WindowMode::delta_t, nullptr, mle);
  CHECK(dt[0].oracle_negativity == doctest::Approx(0.0908).epsilon(1e-3));

  RunConfig noisy = on;
  noisy.imperfections = ImperfectionModel::paper_like();
  try {
    run_oracle(noisy, noisy.windows(), WindowMode::pulse_referenced, nullptr, mle);
    FAIL("expected the oracle to refuse imperfections");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("oracle") != std::string::npos);
  }
  RunConfig paper = on;
  paper.waveform.mode = WaveformMode::paper_like;
  CHECK_THROWS_AS(run_oracle(paper, paper.windows(), WindowMode::pulse_referenced, nullptr, mle), ConfigError);
}

TEST_CASE("command line exit codes and outputs") {
  const fs::path dir = scratch("cli");
  const fs::path cfg = dir / "run.json";
  std::ofstream(cfg) << json{{"seed", 3}, {"simulation", {{"pulses_per_setting", 5000}}}}.dump();
  const fs::path bad = dir / "bad.json";
  std::ofstream(bad) << json{{"seed", 3}, {"emitter", {{"tau_x_ps", -1}}}}.dump();
  const fs::path log = dir / "log.txt";

  CHECK(run_cli("") == 1);
  CHECK(run_cli("frobnicate") == 1);
  CHECK(run_cli("simulate " + bad.string(), log) == 1);
  CHECK(slurp(log).find("emitter.tau_x_ps") != std::string::npos);
  CHECK(run_cli("simulate " + (dir / "nope.json").string()) == 1);

  const fs::path out = dir / "data";
  CHECK(run_cli("simulate " + cfg.string() + " --out " + out.string() + " --seed 77 --threads 2") == 0);
  CHECK(json::parse(slurp(out / kManifestFile))["seed"] == 77);
  CHECK(load_config(out / kManifestFile).pulses_per_setting == 5000);

  CHECK(run_cli("tomography --input " + out.string() + " --window-ps 16", log) == 0);
  CHECK(slurp(log).find("low statistics") != std::string::npos);
  CHECK(fs::exists(out / "tomography.txt"));
  std::ifstream tin(out / "tomography.txt");
  CHECK_NOTHROW(read_tomography_result(tin));

  CHECK(run_cli("sweep --input " + out.string() + " --windows 500,1000") == 0);
  CHECK(slurp(out / "negativity_curve.csv").find("# dpm=0") != std::string::npos);
  CHECK(run_cli("oracle --input " + out.string() + " --windows 500,1000") == 0);
  CHECK(fs::exists(out / "oracle_curve.csv"));
  CHECK(run_cli("oracle " + cfg.string() + " --mode delta_t --windows inf --out " + dir.string()) == 0);
  CHECK(run_cli("oracle " + cfg.string() + " --windows inf --out " + dir.string()) == 1);

  CHECK(run_cli("tomography --input " + (dir / "missing").string()) == 1);
  fs::remove(out / "coincidence_RL.csv");
  CHECK(run_cli("sweep --input " + out.string(), log) == 1);
  CHECK(slurp(log).find("RL") != std::string::npos);

  // An output location that cannot be created is a runtime failure.
  CHECK(run_cli("simulate " + cfg.string() + " --out /proc/dpm_cannot_write") == 2);
  fs::remove_all(dir.parent_path());
}
