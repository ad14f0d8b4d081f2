#pragma once

// Monte Carlo over excitation pulses. simulate_setting is the OpenMP kernel;
// simulate_setting_serial is the plain reference loop kept for testing and
// benchmarking. Both produce bit-identical maps: every pulse draws from its
// own counter-based stream keyed by (seed, setting, pulse index).

#include <cstdint>
#include <optional>
#include <vector>

#include "dpm/cascade.hpp"
#include "dpm/coincidence_map.hpp"
#include "dpm/waveform.hpp"

namespace dpm {

/// Which clock slots within a modulation cycle the simulated pulses occupy.
enum class SlotSelection { all, reference, modulated };

struct SimulationSpec {
  EmitterParams emitter;
  SetupParams setup;
  std::optional<PhaseWaveform> waveform;  // nullopt: no EOM action at all
  ImperfectionModel imperfections;
  MapGeometry geometry;
  SlotSelection slots = SlotSelection::modulated;

  void validate() const;
};

/// Clock slot of the given pulse under the slot selection.
int pulse_slot(const SimulationSpec& spec, std::uint64_t pulse_index);

/// One cascade through sample → cascade_ket → apply_dpm → apply_imperfections → detect.
DetectedEvent simulate_pulse(const SimulationSpec& spec, const ProjectionSetting& setting, std::uint64_t pulse_index,
                             std::uint64_t master_seed);

CoincidenceMap simulate_setting(const SimulationSpec& spec, const ProjectionSetting& setting, std::uint64_t n_pulses,
                                std::uint64_t master_seed);

CoincidenceMap simulate_setting_serial(const SimulationSpec& spec, const ProjectionSetting& setting,
                                       std::uint64_t n_pulses, std::uint64_t master_seed);

/// All 36 settings in canonical order.
std::vector<CoincidenceMap> simulate_all_settings(const SimulationSpec& spec, std::uint64_t n_pulses,
                                                  std::uint64_t master_seed);

}  // namespace dpm
