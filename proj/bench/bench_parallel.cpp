// Serial reference paths against their OpenMP versions.
//   ./bench_parallel --benchmark_filter=ChiGrid
// Set OMP_NUM_THREADS to vary the thread count of the parallel paths.

#include <benchmark/benchmark.h>

#include <map>

#include "scalemix/copula.hpp"
#include "scalemix/estimator.hpp"
#include "scalemix/panel.hpp"
#include "scalemix/tail_stats.hpp"

using namespace scalemix;

namespace {

const PanelDataset& panel(std::size_t years) {
  static std::map<std::size_t, PanelDataset> cache;
  auto it = cache.find(years);
  if (it == cache.end()) {
    CopulaSpec spec;
    spec.delta = 0.6;
    it = cache.emplace(years, simulate_copula(spec, province_like_sites(30), 92, years, 5)).first;
  }
  return it->second;
}

void BM_ChiGridSerial(benchmark::State& state) {
  const auto& p = panel(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(chi_grid_serial(p, GridConfig{}));
}

void BM_ChiGridParallel(benchmark::State& state) {
  const auto& p = panel(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(chi_grid(p, GridConfig{}));
}

TrainingSetRequest request(std::size_t k) {
  TrainingSetRequest r;
  r.k = k;
  r.seed = 3;
  return r;
}

SimulationLayout layout() { return {province_like_sites(15), 60, 10, 0.90, GridConfig{}}; }

void BM_TrainingSetSerial(benchmark::State& state) {
  const auto l = layout();
  const auto r = request(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(generate_training_set_serial(r, l));
}

void BM_TrainingSetParallel(benchmark::State& state) {
  const auto l = layout();
  const auto r = request(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(generate_training_set(r, l));
}

}  // namespace

BENCHMARK(BM_ChiGridSerial)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ChiGridParallel)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainingSetSerial)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainingSetParallel)->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
