// dpmsim: simulate, reconstruct, sweep and oracle-check cascade datasets.
// Exit status: 0 success, 1 invalid input or configuration, 2 runtime failure.

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>

#include "dpm/errors.hpp"
#include "dpm/pipeline.hpp"

namespace {

using namespace dpm;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> pulses;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::optional<int> bootstrap;
  std::vector<double> windows;
  std::optional<double> origin;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "override the config master seed");
  cmd->add_option("--out", o.out, "override the output directory");
  cmd->add_option("--threads", o.threads, "OpenMP thread count")->check(CLI::PositiveNumber);
}

/// Flags patch individual config values; the file remains the source of the rest.
RunConfig apply(RunConfig c, const Overrides& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.pulses) c.pulses_per_setting = *o.pulses;
  if (o.out) c.output_dir = *o.out;
  if (o.bootstrap) c.bootstrap_resamples = *o.bootstrap;
  if (!o.windows.empty()) c.windows_ps = o.windows;
  if (o.origin) c.window_origin_ps = *o.origin;
  c.validate();
  return c;
}

std::ofstream open_in(const std::string& dir, const std::string& name, fs::path& path) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
  path = fs::path(dir) / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void warn_low(std::uint64_t total, double width) {
  if (total < 100)
    std::cerr << "warning: window " << width << " ps holds only " << total
              << " counts across settings (low statistics)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic phase modulation of a quantum-dot cascade: simulation and tomography"};
  app.require_subcommand(1);

  Overrides o;
  std::string config_path, input_dir, mode_name = "pulse_referenced";
  double window_ps = 0.0;

  auto* sim = app.add_subcommand("simulate", "simulate all 36 projection settings");
  sim->add_option("config", config_path, "run configuration (JSON or manifest)")->required()->check(CLI::ExistingFile);
  sim->add_option("--pulses", o.pulses, "override pulses per setting");
  add_common(sim, o);

  auto* tomo = app.add_subcommand("tomography", "windowed MLE reconstruction of a simulated dataset");
  tomo->add_option("--input", input_dir, "directory written by simulate")->required()->check(CLI::ExistingDirectory);
  tomo->add_option("--config", config_path, "config overriding the manifest")->check(CLI::ExistingFile);
  tomo->add_option("--window-ps", window_ps, "window width (default: widest configured window)");
  tomo->add_option("--origin-ps", o.origin, "window origin");
  tomo->add_option("--bootstrap", o.bootstrap, "bootstrap resamples (0 or >= 100)");
  add_common(tomo, o);

  auto* sweep = app.add_subcommand("sweep", "negativity versus window width");
  sweep->add_option("--input", input_dir, "directory written by simulate")->required()->check(CLI::ExistingDirectory);
  sweep->add_option("--config", config_path, "config overriding the manifest")->check(CLI::ExistingFile);
  sweep->add_option("--windows", o.windows, "window widths in ps")->delimiter(',');
  sweep->add_option("--origin-ps", o.origin, "window origin");
  sweep->add_option("--bootstrap", o.bootstrap, "bootstrap resamples (0 or >= 100)");
  add_common(sweep, o);

  auto* oracle = app.add_subcommand("oracle", "analytic coherence oracle, optionally compared with a dataset");
  oracle->add_option("config", config_path, "run configuration")->check(CLI::ExistingFile);
  oracle->add_option("--input", input_dir, "simulated dataset to compare against")->check(CLI::ExistingDirectory);
  oracle->add_option("--windows", o.windows, "window widths in ps (inf allowed in delta_t mode)")->delimiter(',');
  oracle->add_option("--mode", mode_name, "pulse_referenced or delta_t")
      ->check(CLI::IsMember({"pulse_referenced", "delta_t"}));
  add_common(oracle, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (o.threads) omp_set_num_threads(*o.threads);

    if (sim->parsed()) {
      const RunConfig cfg = apply(load_config(config_path), o);
      const SimulateSummary s = run_simulate(cfg);
      std::uint64_t total = 0;
      for (auto t : s.totals) total += t;
      std::cout << "wrote 36 coincidence maps (" << total << " coincidences) to " << s.output_dir.string() << '\n';
      return 0;
    }

    if (tomo->parsed() || sweep->parsed()) {
      SimulationData data = load_simulation(input_dir);
      RunConfig base = config_path.empty() ? data.config : load_config(config_path);
      if (!o.out) o.out = input_dir;
      const RunConfig cfg = apply(base, o);

      if (tomo->parsed()) {
        double w = window_ps;
        if (w == 0.0) {
          if (cfg.windows_ps.empty()) throw ConfigError("analysis.windows_ps", "no window given");
          w = *std::max_element(cfg.windows_ps.begin(), cfg.windows_ps.end());
        }
        const TomographyRun run =
            run_tomography(data, {w, cfg.window_origin_ps}, cfg.mle, cfg.bootstrap_resamples, *cfg.seed);
        warn_low(run.total_counts, w);
        fs::path p;
        std::ofstream out = open_in(cfg.output_dir, "tomography.txt", p);
        write_tomography_result(out, run.result);
        if (!out.flush()) throw std::runtime_error("write failed for " + p.string());
        std::cout << "negativity " << negativity(run.result.rho) << " (window " << run.effective_width_ps
                  << " ps effective, " << run.total_counts << " counts, "
                  << (run.result.converged ? "converged" : "NOT converged") << ") -> " << p.string() << '\n';
        return 0;
      }

      const NegativityCurve curve = run_sweep(data, cfg.windows(), cfg.mle, cfg.bootstrap_resamples, *cfg.seed);
      for (const CurvePoint& pt : curve.points) warn_low(pt.total_counts, pt.t_w_ps);
      fs::path p;
      std::ofstream out = open_in(cfg.output_dir, "negativity_curve.csv", p);
      write_curve_csv(out, curve, *cfg.seed, "pulse_referenced");
      if (!out.flush()) throw std::runtime_error("write failed for " + p.string());
      std::cout << "wrote " << curve.points.size() << " curve points to " << p.string() << '\n';
      return 0;
    }

    if (oracle->parsed()) {
      std::optional<SimulationData> data;
      if (!input_dir.empty()) data = load_simulation(input_dir);
      if (config_path.empty() && !data) throw ConfigError("config", "oracle needs a config file or --input dataset");
      RunConfig base = config_path.empty() ? data->config : load_config(config_path);
      if (!o.out && data) o.out = input_dir;
      // Infinite widths are only meaningful for the Δt mode; bypass the finite-window check there.
      std::vector<double> widths = o.windows.empty() ? base.windows_ps : o.windows;
      o.windows.clear();
      const RunConfig cfg = apply(base, o);
      const WindowMode mode = mode_name == "delta_t" ? WindowMode::delta_t : WindowMode::pulse_referenced;
      std::vector<TimeWindow> windows;
      for (double w : widths) {
        if (!(w > 0.0)) throw ConfigError("analysis.windows_ps", "window widths must be positive");
        if (std::isinf(w) && mode != WindowMode::delta_t)
          throw ConfigError("analysis.windows_ps", "infinite windows need --mode delta_t");
        windows.push_back({w, cfg.window_origin_ps});
      }
      const auto rows = run_oracle(cfg, windows, mode, data ? &*data : nullptr, cfg.mle);
      fs::path p;
      std::ofstream out = open_in(cfg.output_dir, "oracle_curve.csv", p);
      write_oracle_csv(out, rows, (data ? data->config : cfg).dpm(), mode);
      if (!out.flush()) throw std::runtime_error("write failed for " + p.string());
      double worst = 0.0;
      for (const OracleRow& r : rows)
        if (r.deviation) worst = std::max(worst, std::abs(*r.deviation));
      std::cout << "wrote " << rows.size() << " oracle rows to " << p.string();
      if (data && mode == WindowMode::pulse_referenced) std::cout << "; max |MC - oracle| = " << worst;
      std::cout << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
