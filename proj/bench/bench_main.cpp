// Serial reference against the OpenMP kernel, plus the per-window analysis costs.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "dpm/analysis.hpp"
#include "dpm/simulate.hpp"
#include "dpm/tomography.hpp"
#include "dpm/waveform.hpp"

namespace {

using namespace dpm;

SimulationSpec dpm_spec() {
  SimulationSpec spec;
  spec.waveform = ideal_compensation_waveform(spec.emitter, spec.setup);
  return spec;
}

void BM_SimulateSerial(benchmark::State& state) {
  const SimulationSpec spec = dpm_spec();
  const auto n = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(simulate_setting_serial(spec, ProjectionSetting::from_label("RR"), n, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_SimulateParallel(benchmark::State& state) {
  const SimulationSpec spec = dpm_spec();
  const auto n = static_cast<std::uint64_t>(state.range(0));
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_setting(spec, ProjectionSetting::from_label("RR"), n, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
  omp_set_num_threads(omp_get_num_procs());
}

void BM_MleReconstruct(benchmark::State& state) {
  const SimulationSpec spec = dpm_spec();
  const std::vector<CoincidenceMap> maps = simulate_all_settings(spec, 20000, 2);
  const std::vector<CountRecord> rec = windowed_records(maps, {static_cast<double>(state.range(0)), 0.0});
  for (auto _ : state) benchmark::DoNotOptimize(mle_reconstruct(rec));
}

void BM_Oracle(benchmark::State& state) {
  const EmitterParams params;
  for (auto _ : state) benchmark::DoNotOptimize(oracle_coherence(params, {3000.0, 0.0}, false));
}

}  // namespace

BENCHMARK(BM_SimulateSerial)->Arg(1 << 18)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateParallel)->Args({1 << 18, 1})->Args({1 << 18, 2})->Args({1 << 18, 4})->Args({1 << 18, 8})
    ->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MleReconstruct)->Arg(96)->Arg(3000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Oracle)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
