#include <benchmark/benchmark.h>

#include <random>

#include "hforge/geometry.hpp"
#include "hforge/skeleton.hpp"

namespace {

void BM_NearestPointToLines(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<hforge::Ray> rays;
  for (int i = 0; i < state.range(0); ++i) {
    rays.push_back(hforge::Ray{hforge::Vec3(n(rng), n(rng), n(rng)), hforge::Vec3(n(rng), n(rng), n(rng)).normalized()});
  }
  for (auto _ : state) benchmark::DoNotOptimize(hforge::nearest_point_to_lines(rays));
}
BENCHMARK(BM_NearestPointToLines)->Arg(2)->Arg(8)->Arg(24)->Arg(96);

// Oracle detector needs no image, so this times projection and solving only.
void BM_EstimateSkeleton(benchmark::State& state) {
  hforge::Mesh mesh;
  mesh.vertices = {{-0.2, -1, -0.1}, {0.2, -1, -0.1}, {0, 0, 0.1}, {0, -1, 0.2}};
  mesh.colors.assign(4, hforge::Vec3(1, 1, 1));
  mesh.triangles = {{0, 1, 2}, {0, 2, 3}, {1, 3, 2}, {0, 3, 1}};
  std::vector<hforge::Vec3> joints;
  for (int s = 0; s < hforge::coco::kNumKeypoints; ++s) joints.emplace_back(0.01 * s, -0.05 * s, 0.0);
  const hforge::ViewRig rig = hforge::default_rig(1.0, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    hforge::OracleDetector det(joints, 2.0);
    benchmark::DoNotOptimize(hforge::estimate_skeleton(mesh, rig, det));
  }
}
BENCHMARK(BM_EstimateSkeleton)->Arg(4)->Arg(24)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
