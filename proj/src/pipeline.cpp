#include "dpm/pipeline.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "dpm/errors.hpp"

namespace dpm {

using nlohmann::json;

namespace {

std::ofstream open_output(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& p) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + p.string());
}

}  // namespace

std::string map_file_name(const ProjectionSetting& s) { return "coincidence_" + s.label() + ".csv"; }
std::string profile_file_name(const ProjectionSetting& s) { return "profile_" + s.label() + ".csv"; }

SimulateSummary run_simulate(const RunConfig& config) {
  config.validate();
  const SimulationSpec spec = simulation_spec(config);
  const fs::path dir = config.output_dir;
  std::error_code ec;
  fs::create_directories(dir / "profiles", ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());

  const std::vector<CoincidenceMap> maps = simulate_all_settings(spec, config.pulses_per_setting, *config.seed);

  SimulateSummary summary{dir, {}};
  json totals = json::object(), overflow = json::object();
  for (const CoincidenceMap& m : maps) {
    const fs::path mp = dir / map_file_name(m.setting());
    std::ofstream out = open_output(mp);
    write_coincidence_csv(out, m);
    finish(out, mp);

    const fs::path pp = dir / "profiles" / profile_file_name(m.setting());
    std::ofstream pout = open_output(pp);
    write_profile_csv(pout, diagonal_profile(m), config.dpm(), *config.seed);
    finish(pout, pp);

    summary.totals.push_back(m.total());
    totals[m.setting().label()] = m.total();
    overflow[m.setting().label()] = m.overflow();
  }

  json manifest;
  manifest["format"] = "dpm-run-manifest v1";
  manifest["config"] = config_to_json(config);
  manifest["seed"] = *config.seed;
  manifest["dpm"] = config.dpm();
  manifest["imperfection_preset"] = config.imperfection_preset;
  manifest["waveform"] = to_string(config.waveform.mode);
  manifest["totals"] = totals;
  manifest["overflow"] = overflow;
  const fs::path mf = dir / kManifestFile;
  std::ofstream out = open_output(mf);
  out << manifest.dump(2) << '\n';
  finish(out, mf);
  return summary;
}

SimulationData load_simulation(const fs::path& input_dir) {
  SimulationData data;
  const fs::path mf = input_dir / kManifestFile;
  if (!fs::exists(mf)) throw std::invalid_argument("no " + std::string(kManifestFile) + " in " + input_dir.string());
  data.config = load_config(mf);

  std::string missing;
  for (const ProjectionSetting& s : standard_settings())
    if (!fs::exists(input_dir / map_file_name(s))) missing += (missing.empty() ? "" : ", ") + s.label();
  if (!missing.empty()) throw std::invalid_argument("missing coincidence files for settings: " + missing);

  for (const ProjectionSetting& s : standard_settings()) {
    const fs::path p = input_dir / map_file_name(s);
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    CoincidenceMap m = read_coincidence_csv(in, p.string());
    if (!(m.setting() == s)) throw ParseError(p.string(), 1, "file holds setting " + m.setting().label());
    data.maps.push_back(std::move(m));
  }
  return data;
}

TomographyRun run_tomography(const SimulationData& data, const TimeWindow& window, const MleConfig& mle,
                             int bootstrap_resamples, std::uint64_t seed) {
  mle.validate();
  TomographyRun run;
  const std::vector<CountRecord> rec = windowed_records(data.maps, window);
  run.effective_width_ps = window_counts(data.maps.front(), window).effective_width_ps;
  for (const CountRecord& r : rec) run.total_counts += r.count;
  run.low_statistics = run.total_counts < 100;
  run.result = mle_reconstruct(rec, mle);
  if (bootstrap_resamples > 0) run.result.uncertainties = bootstrap_uncertainties(rec, bootstrap_resamples, mle, seed);
  return run;
}

NegativityCurve run_sweep(const SimulationData& data, const std::vector<TimeWindow>& windows, const MleConfig& mle,
                          int bootstrap_resamples, std::uint64_t seed) {
  if (windows.empty()) throw std::invalid_argument("empty window list");
  SweepOptions opt;
  opt.mle = mle;
  opt.bootstrap_resamples = bootstrap_resamples;
  opt.bootstrap_seed = seed;
  return negativity_vs_window(data.maps, windows, opt, data.config.dpm());
}

std::vector<OracleRow> run_oracle(const RunConfig& config, const std::vector<TimeWindow>& windows, WindowMode mode,
                                  const SimulationData* data, const MleConfig& mle) {
  if (windows.empty()) throw std::invalid_argument("empty window list");
  const RunConfig& cfg = data ? data->config : config;
  const char* scope =
      "the oracle models polarization-perfect optics with an unclamped ideal waveform only; imperfection effects are "
      "checked by Monte Carlo self-consistency instead";
  if (!cfg.imperfections.is_ideal()) throw ConfigError("imperfections", scope);
  if (cfg.waveform.mode != WaveformMode::none && cfg.waveform.mode != WaveformMode::ideal)
    throw ConfigError("waveform.mode", scope);

  std::vector<OracleRow> rows(windows.size());
  for (std::size_t k = 0; k < windows.size(); ++k) {
    OracleRow& row = rows[k];
    TimeWindow w = windows[k];
    row.t_w_ps = w.width_ps;
    const bool compare = data && mode == WindowMode::pulse_referenced;
    if (compare) {
      const WindowedCounts wc = window_counts(data->maps.front(), w);
      w = {wc.effective_width_ps, wc.effective_origin_ps};
    }
    row.effective_width_ps = w.width_ps;
    row.oracle_negativity = negativity(oracle_rho(cfg.emitter, w, cfg.dpm(), 0.0, mode));
  }
  if (data && mode == WindowMode::pulse_referenced) {
    SweepOptions opt;
    opt.mle = mle;
    const NegativityCurve mc = negativity_vs_window(data->maps, windows, opt, cfg.dpm());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      rows[k].mc_negativity = mc.points[k].negativity;
      rows[k].deviation = mc.points[k].negativity - rows[k].oracle_negativity;
    }
  }
  return rows;
}

void write_oracle_csv(std::ostream& os, const std::vector<OracleRow>& rows, bool dpm, WindowMode mode) {
  const auto prec = os.precision();
  os << std::setprecision(12);
  os << "# dpm=" << (dpm ? 1 : 0) << '\n';
  os << "# window_origin_mode=" << (mode == WindowMode::pulse_referenced ? "pulse_referenced" : "delta_t") << '\n';
  os << "t_w_ps,effective_width_ps,oracle_negativity,mc_negativity,deviation\n";
  for (const OracleRow& r : rows) {
    os << r.t_w_ps << ',' << r.effective_width_ps << ',' << r.oracle_negativity << ',';
    if (r.mc_negativity) os << *r.mc_negativity;
    os << ',';
    if (r.deviation) os << *r.deviation;
    os << '\n';
  }
  os.precision(prec);
}

}  // namespace dpm
