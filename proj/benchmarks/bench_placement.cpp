#include <benchmark/benchmark.h>

#include <numeric>

#include "hforge/dataset.hpp"
#include "hforge/placement.hpp"

namespace {

void BM_PlanScene(benchmark::State& state) {
  hforge::SegMask mask(2048, 1024, 11);
  for (int y = 600; y < 1024; ++y) {
    for (int x = 0; x < 2048; ++x) mask.at(x, y) = x < 400 || x > 1650 ? 8 : 7;
  }
  hforge::PlacementConfig cfg;
  cfg.valid_class_ids = {7, 8};
  cfg.ground = hforge::default_ground_model(2048, 1024);
  cfg.max_persons = static_cast<int>(state.range(0));
  const std::vector<hforge::ModelInfo> models = {{0, 1.0, 0.4, 0.3}, {1, 1.0, 0.5, 0.25}};
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(hforge::plan_scene("bench", mask, models, cfg, ++seed));
}
BENCHMARK(BM_PlanScene)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_SplitDataset(benchmark::State& state) {
  std::vector<int> ids(static_cast<std::size_t>(state.range(0)));
  std::iota(ids.begin(), ids.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(hforge::split_dataset(ids, 0.8, 42));
}
BENCHMARK(BM_SplitDataset)->Arg(50000);

}  // namespace

BENCHMARK_MAIN();
