#pragma once

// Run configuration: a JSON document with one section per domain type and
// unit-suffixed keys. Unknown keys are rejected so a missing unit suffix
// cannot silently fall back to a default.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpm/analysis.hpp"
#include "dpm/cascade.hpp"
#include "dpm/coincidence_map.hpp"
#include "dpm/simulate.hpp"
#include "dpm/tomography.hpp"
#include "dpm/waveform.hpp"

namespace dpm {

enum class WaveformMode { none, ideal, paper_like, explicit_segments };

struct WaveformConfig {
  WaveformMode mode = WaveformMode::none;
  // explicit_segments only
  std::vector<PhaseSegment> segments;
  double period_ps = 0.0;
  std::optional<double> range_limit_rad;  // enables the clamp
  std::optional<double> clamp_center_rad;
};

inline constexpr const char* kPaperLikePreset = "paper-like-v1";

struct RunConfig {
  std::optional<std::uint64_t> seed;  // mandatory; kept optional to detect absence
  std::string output_dir = "out";
  EmitterParams emitter;
  SetupParams setup;
  /// "none", "paper-like-v1", or "custom" when fields deviate from a preset.
  std::string imperfection_preset = "none";
  ImperfectionModel imperfections;
  WaveformConfig waveform;
  MapGeometry histogram;
  std::uint64_t pulses_per_setting = 100000;
  SlotSelection slots = SlotSelection::modulated;
  std::vector<double> windows_ps = {96, 250, 500, 1000, 2000, 3000};
  double window_origin_ps = 0.0;
  int bootstrap_resamples = 0;
  MleConfig mle;

  bool dpm() const { return waveform.mode != WaveformMode::none; }
  std::vector<TimeWindow> windows() const;
  /// Throws ConfigError with the dotted path of the first offending field.
  void validate() const;
};

/// Parses and validates. Accepts either a bare config or a run manifest
/// (whose "config" member is used), so manifests re-execute directly.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);

/// Throws ParseError for unreadable or malformed JSON.
RunConfig load_config(const std::filesystem::path& path);

/// Simulation inputs derived from the config, waveform built.
SimulationSpec simulation_spec(const RunConfig& config);

std::string to_string(WaveformMode m);
std::string to_string(SlotSelection s);

}  // namespace dpm
