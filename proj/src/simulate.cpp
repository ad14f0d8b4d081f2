#include "dpm/simulate.hpp"

#include <stdexcept>

#include "dpm/errors.hpp"

namespace dpm {

void SimulationSpec::validate() const {
  emitter.validate();
  setup.validate();
  imperfections.validate();
  geometry.validate();
}

int pulse_slot(const SimulationSpec& spec, std::uint64_t pulse_index) {
  const auto ppc = static_cast<std::uint64_t>(spec.setup.pulses_per_cycle);
  const auto half = ppc / 2;
  switch (spec.slots) {
    case SlotSelection::all: return static_cast<int>(pulse_index % ppc);
    case SlotSelection::reference: return static_cast<int>(pulse_index % half);
    case SlotSelection::modulated: return static_cast<int>(half + pulse_index % half);
  }
  throw std::logic_error("unreachable slot selection");
}

namespace {

struct Analyzers {
  JonesVector xx, x;
};

inline DetectedEvent run_pulse(const SimulationSpec& spec, const ProjectionSetting& setting, const Analyzers& an,
                               std::uint64_t pulse_index, std::uint64_t master_seed) {
  CounterRng rng(master_seed, static_cast<std::uint64_t>(setting.index()), pulse_index);
  const EmissionEvent ev = sample_emission(spec.emitter, rng);
  TwoPhotonKet ket = cascade_ket(ev, spec.emitter);
  if (spec.waveform) {
    const double slot_start = pulse_slot(spec, pulse_index) * spec.setup.clock_period_ps;
    ket = apply_dpm(ket, *spec.waveform, ev, spec.setup, slot_start);
  }
  ket = apply_imperfections(ket, spec.imperfections, rng);
  return detect(ev, ket, setting, an.xx, an.x, spec.imperfections, spec.geometry.axis_range_ps, rng);
}

}  // namespace

DetectedEvent simulate_pulse(const SimulationSpec& spec, const ProjectionSetting& setting, std::uint64_t pulse_index,
                             std::uint64_t master_seed) {
  return run_pulse(spec, setting, {basis_vector(setting.xx), basis_vector(setting.x)}, pulse_index, master_seed);
}

CoincidenceMap simulate_setting_serial(const SimulationSpec& spec, const ProjectionSetting& setting,
                                       std::uint64_t n_pulses, std::uint64_t master_seed) {
  if (n_pulses == 0) throw ConfigError("simulation.pulses_per_setting", "must be positive");
  spec.validate();
  const Analyzers an{basis_vector(setting.xx), basis_vector(setting.x)};
  CoincidenceMap map(setting, spec.geometry, n_pulses, master_seed);
  for (std::uint64_t p = 0; p < n_pulses; ++p) {
    const DetectedEvent d = run_pulse(spec, setting, an, p, master_seed);
    if (d.accepted) map.add(d.recorded_t_xx_ps, d.recorded_t_x_ps);
  }
  return map;
}

CoincidenceMap simulate_setting(const SimulationSpec& spec, const ProjectionSetting& setting, std::uint64_t n_pulses,
                                std::uint64_t master_seed) {
  if (n_pulses == 0) throw ConfigError("simulation.pulses_per_setting", "must be positive");
  spec.validate();
  const Analyzers an{basis_vector(setting.xx), basis_vector(setting.x)};
  CoincidenceMap map(setting, spec.geometry, n_pulses, master_seed);
  const auto n = static_cast<std::int64_t>(n_pulses);

#pragma omp parallel
  {
    CoincidenceMap local(setting, spec.geometry, 0, master_seed);
#pragma omp for schedule(static)
    for (std::int64_t p = 0; p < n; ++p) {
      const DetectedEvent d = run_pulse(spec, setting, an, static_cast<std::uint64_t>(p), master_seed);
      if (d.accepted) local.add(d.recorded_t_xx_ps, d.recorded_t_x_ps);
    }
#pragma omp critical(dpm_merge_maps)
    map.merge(local);
  }
  return map;
}

std::vector<CoincidenceMap> simulate_all_settings(const SimulationSpec& spec, std::uint64_t n_pulses,
                                                  std::uint64_t master_seed) {
  std::vector<CoincidenceMap> maps;
  maps.reserve(36);
  for (int k = 0; k < 36; ++k) maps.push_back(simulate_setting(spec, ProjectionSetting::from_index(k), n_pulses, master_seed));
  return maps;
}

}  // namespace dpm
