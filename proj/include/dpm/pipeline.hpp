#pragma once

// End-to-end runs behind the CLI subcommands. Every output file is written by
// a single caller after the parallel kernels have finished.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dpm/analysis.hpp"
#include "dpm/config.hpp"

namespace dpm {

namespace fs = std::filesystem;

std::string map_file_name(const ProjectionSetting& s);      // "coincidence_HH.csv"
std::string profile_file_name(const ProjectionSetting& s);  // "profile_HH.csv"
inline constexpr const char* kManifestFile = "manifest.json";

struct SimulateSummary {
  fs::path output_dir;
  std::vector<std::uint64_t> totals;  // canonical setting order
};

/// Writes output_dir/coincidence_XY.csv for all 36 settings, the matching
/// Δt profiles under output_dir/profiles/, and output_dir/manifest.json.
SimulateSummary run_simulate(const RunConfig& config);

struct SimulationData {
  RunConfig config;  // as recorded in the manifest
  std::vector<CoincidenceMap> maps;
};

/// Reads the manifest and all 36 maps; missing files are listed together.
SimulationData load_simulation(const fs::path& input_dir);

struct TomographyRun {
  TomographyResult result;
  std::uint64_t total_counts = 0;
  bool low_statistics = false;
  double effective_width_ps = 0.0;
};

/// Windowed MLE of one window; bootstrap uncertainties when resamples > 0.
TomographyRun run_tomography(const SimulationData& data, const TimeWindow& window, const MleConfig& mle,
                             int bootstrap_resamples, std::uint64_t seed);

NegativityCurve run_sweep(const SimulationData& data, const std::vector<TimeWindow>& windows, const MleConfig& mle,
                          int bootstrap_resamples, std::uint64_t seed);

struct OracleRow {
  double t_w_ps = 0.0;
  double effective_width_ps = 0.0;
  double oracle_negativity = 0.0;
  std::optional<double> mc_negativity;
  std::optional<double> deviation;
};

/// Oracle negativity per window. Rejects configs with any imperfection. With
/// simulation data the oracle is evaluated on the bin-aligned effective window
/// and compared with the MLE negativity of the same window.
std::vector<OracleRow> run_oracle(const RunConfig& config, const std::vector<TimeWindow>& windows, WindowMode mode,
                                  const SimulationData* data, const MleConfig& mle);

void write_oracle_csv(std::ostream& os, const std::vector<OracleRow>& rows, bool dpm, WindowMode mode);

}  // namespace dpm
