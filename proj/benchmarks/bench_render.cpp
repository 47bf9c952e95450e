#include <benchmark/benchmark.h>

#include <random>

#include "hforge/render.hpp"

namespace {

// Random triangle soup in front of a 640x480 camera.
hforge::Mesh soup(int triangles, double spread_px) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 640.0), v(0.0, 480.0), z(2.0, 8.0), d(-1.0, 1.0);
  hforge::Mesh m;
  for (int t = 0; t < triangles; ++t) {
    const double cu = u(rng), cv = v(rng), cz = z(rng);
    for (int k = 0; k < 3; ++k) {
      const double pu = cu + spread_px * d(rng), pv = cv + spread_px * d(rng);
      m.vertices.emplace_back((pu - 320.0) * cz / 500.0, (pv - 240.0) * cz / 500.0, cz);
      m.colors.emplace_back(0.5, 0.5, 0.5);
    }
    const auto b = static_cast<std::uint32_t>(3 * t);
    m.triangles.push_back({b, b + 1, b + 2});
  }
  return m;
}

void BM_RenderMesh(benchmark::State& state) {
  const hforge::Mesh mesh = soup(static_cast<int>(state.range(0)), 20.0);
  hforge::CameraIntrinsics cam;
  cam.fx = cam.fy = 500.0;
  cam.cx = 320.0;
  cam.cy = 240.0;
  cam.width = 640;
  cam.height = 480;
  for (auto _ : state) {
    auto fb = hforge::render_mesh(mesh, cam, hforge::CameraPose{});
    benchmark::DoNotOptimize(fb.depth.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RenderMesh)->RangeMultiplier(8)->Range(64, 32768)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
