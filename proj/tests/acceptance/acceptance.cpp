// Acceptance suite: one line per criterion, nonzero exit when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "hforge/compose.hpp"
#include "hforge/dataset.hpp"
#include "hforge/geometry.hpp"
#include "hforge/placement.hpp"
#include "hforge/render.hpp"
#include "hforge/skeleton.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

namespace {

using namespace hforge;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  const char* id;
  const char* name;
  double time_limit_s;  // 0 = no limit
  std::function<Outcome()> run;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Mesh tiny_mesh() { return synth::make_box(Vec3(-0.1, -0.1, -0.1), Vec3(0.1, 0.1, 0.1), Vec3(1, 1, 1)); }

// 1. Noise-free oracle, 24-view ring, 10 skeletons.
Outcome triangulation_exactness() {
  constexpr double kTol = 1e-6;
  std::mt19937_64 rng(101);
  double worst_err = 0.0, worst_res = 0.0;
  int resolved = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto gt = synth::random_skeleton(rng);
    OracleDetector det(gt);
    const JointSet3D joints = estimate_skeleton(tiny_mesh(), default_rig(1.0, 24), det);
    for (int s = 0; s < coco::kNumKeypoints; ++s) {
      if (!joints[s].resolved()) continue;
      ++resolved;
      worst_err = std::max(worst_err, (*joints[s].position - gt[s]).norm());
      worst_res = std::max(worst_res, joints[s].rms_residual);
    }
  }
  const bool pass = resolved == 170 && worst_err <= kTol && worst_res <= kTol;
  return {pass, fmt::format("resolved {}/170, max error {:.2e} (<= {:.0e}), max residual {:.2e} (<= {:.0e})", resolved,
                            worst_err, kTol, worst_res, kTol)};
}

// 2. sigma = 2 px, 100 trials, n = 4 vs n = 16.
Outcome view_count_monotonicity() {
  std::mt19937_64 rng(202);
  std::vector<double> e4, e16;
  for (int trial = 0; trial < 100; ++trial) {
    const auto gt = synth::random_skeleton(rng);
    OracleDetector d4(gt, 2.0, 0.0, 2 * trial), d16(gt, 2.0, 0.0, 2 * trial + 1);
    const JointSet3D a = estimate_skeleton(tiny_mesh(), default_rig(1.0, 4), d4);
    const JointSet3D b = estimate_skeleton(tiny_mesh(), default_rig(1.0, 16), d16);
    for (int s = 0; s < coco::kNumKeypoints; ++s) {
      if (a[s].resolved()) e4.push_back((*a[s].position - gt[s]).norm());
      if (b[s].resolved()) e16.push_back((*b[s].position - gt[s]).norm());
    }
  }
  const double m4 = median(e4), m16 = median(e16);
  return {m16 < m4, fmt::format("median error n=4 {:.4e}, n=16 {:.4e} (n=16 < n=4 required)", m4, m16)};
}

// 3. Solver vs brute-force minimization on 100 random 3-ray instances.
Outcome solver_oracle_equivalence() {
  constexpr double kTol = 1e-3;
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> pos(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 target(pos(rng), pos(rng), pos(rng));
    std::vector<Ray> rays;
    for (int i = 0; i < 3; ++i) {
      const Vec3 d = oracle::random_unit(rng);
      const Vec3 offset = 0.3 * Vec3(pos(rng), pos(rng), pos(rng));
      rays.push_back(Ray{target + offset - 2.0 * d, d});
    }
    const LineFit fit = nearest_point_to_lines(rays);
    const Vec3 grid = oracle::grid_minimize(rays, target, 2.0);
    worst = std::max(worst, (fit.point - grid).norm());
  }
  return {worst <= kTol, fmt::format("max |solver - grid search| {:.2e} (<= {:.0e}) over 100 instances", worst, kTol)};
}

CameraIntrinsics cam64() {
  CameraIntrinsics c;
  c.fx = c.fy = 60.0;
  c.cx = c.cy = 32.0;
  c.width = c.height = 64;
  return c;
}

Vec3 at_pixel(const CameraIntrinsics& cam, double u, double v, double z) {
  return Vec3((u - cam.cx) * z / cam.fx, (v - cam.cy) * z / cam.fy, z);
}

raster::ScreenVertex screen_of(const CameraIntrinsics& cam, const Vec3& p) {
  const Projection q = project(cam, CameraPose{}, p);
  return {q.u, q.v};
}

// 4. Coverage vs point-in-triangle oracle; depth vs ray-cast oracle.
Outcome rasterizer_correctness() {
  constexpr double kDepthTol = 1e-9;
  const CameraIntrinsics cam = cam64();
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> pix(-8.0, 72.0), depth(1.0, 4.0);
  std::uniform_int_distribution<int> grid(-4, 68);
  int coverage_mismatch = 0;
  long covered = 0;
  for (int scene = 0; scene < 50; ++scene) {
    Mesh m;
    const bool snap = scene % 2 == 0;
    for (int k = 0; k < 3; ++k) {
      m.vertices.push_back(at_pixel(cam, snap ? grid(rng) : pix(rng), snap ? grid(rng) : pix(rng), depth(rng)));
      m.colors.push_back(Vec3(1, 1, 1));
    }
    m.triangles = {{0, 1, 2}};
    const Framebuffer fb = render_mesh(m, cam, CameraPose{});
    const auto a = screen_of(cam, m.vertices[0]), b = screen_of(cam, m.vertices[1]), c = screen_of(cam, m.vertices[2]);
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        covered += fb.covered(x, y);
        coverage_mismatch += fb.covered(x, y) != oracle::covers(a, b, c, x, y);
      }
    }
  }

  std::uniform_real_distribution<double> wide(-10.0, 74.0), far(1.0, 6.0), size(-6.0, 6.0);
  std::uniform_int_distribution<int> tri_count(1, 200);
  double worst_rel = 0.0;
  int depth_mismatch = 0;
  for (int scene = 0; scene < 10; ++scene) {
    Mesh m;
    std::vector<raster::ScreenVertex> scr;
    const int n = scene == 0 ? 200 : tri_count(rng);
    for (int t = 0; t < n; ++t) {
      const double u = wide(rng), v = wide(rng), z = far(rng);
      for (int k = 0; k < 3; ++k) {
        m.vertices.push_back(at_pixel(cam, u + (k ? size(rng) : 0.0) * 3, v + (k ? size(rng) : 0.0) * 3,
                                      z + 0.05 * size(rng)));
        m.colors.push_back(Vec3(0.5, 0.5, 0.5));
        scr.push_back(screen_of(cam, m.vertices.back()));
      }
      const auto base = static_cast<std::uint32_t>(3 * t);
      m.triangles.push_back({base, base + 1, base + 2});
    }
    const Framebuffer fb = render_mesh(m, cam, CameraPose{});
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        double best = kNoDepth;
        for (std::size_t t = 0; t < m.triangles.size(); ++t) {
          if (!oracle::covers(scr[3 * t], scr[3 * t + 1], scr[3 * t + 2], x, y)) continue;
          best = std::min(best,
                          oracle::plane_depth(cam, m.vertices[3 * t], m.vertices[3 * t + 1], m.vertices[3 * t + 2], x, y));
        }
        const double got = fb.depth[fb.index(x, y)];
        if (std::isinf(best) || std::isinf(got)) {
          depth_mismatch += std::isinf(best) != std::isinf(got);
        } else {
          worst_rel = std::max(worst_rel, std::abs(got - best) / best);
        }
      }
    }
  }
  const bool pass = coverage_mismatch == 0 && depth_mismatch == 0 && worst_rel <= kDepthTol;
  return {pass, fmt::format("coverage mismatches {} of 204800 pixels ({} covered); depth coverage mismatches {}, "
                            "max relative depth error {:.2e} (<= {:.0e})",
                            coverage_mismatch, covered, depth_mismatch, worst_rel, kDepthTol)};
}

// 5. Placement invariants and the closed-form scale law.
Outcome placement_validity() {
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<int> persons(1, 6);
  std::uniform_real_distribution<double> sep(5.0, 60.0), overlap(0.0, 0.5);
  int placements = 0, violations = 0, law = 0;
  for (int scene = 0; scene < 100; ++scene) {
    const int w = 640, h = 480;
    const SegMask mask = synth::street_mask(w, h, 1000 + scene);
    PlacementConfig cfg;
    cfg.valid_class_ids = {7, 8};
    cfg.person_class_ids = {24, 25};
    cfg.ground = GroundModel{0.35 * h + scene % 40, 1.2 + 0.01 * scene, 500.0 + 3 * scene};
    cfg.max_persons = persons(rng);
    cfg.min_anchor_separation = sep(rng);
    cfg.max_bbox_iou = overlap(rng);
    std::vector<ModelInfo> models;
    for (int i = 0; i < 5; ++i) models.push_back(ModelInfo{i, 1.0, 0.3 + 0.03 * i, 0.2});
    const PlacementPlan plan = plan_scene("s" + std::to_string(scene), mask, models, cfg, rng());
    for (std::size_t i = 0; i < plan.placements.size(); ++i) {
      const Placement& p = plan.placements[i];
      ++placements;
      const bool in_image = p.anchor.u >= 0 && p.anchor.v >= 0 && p.anchor.u < w && p.anchor.v < h;
      if (!in_image || !cfg.valid_class_ids.contains(mask.at(p.anchor.u, p.anchor.v)) ||
          !(p.anchor.v > cfg.ground.horizon_row)) {
        ++violations;
      }
      if (i > 0 && plan.placements[i - 1].distance < p.distance) ++violations;
      for (std::size_t j = 0; j < i; ++j) {
        const Placement& q = plan.placements[j];
        if (std::hypot(p.anchor.u - q.anchor.u, p.anchor.v - q.anchor.v) < cfg.min_anchor_separation) ++violations;
        if (iou(p.predicted_bbox, q.predicted_bbox) > cfg.max_bbox_iou) ++violations;
      }
      const double expected = p.person_height_m * (p.anchor.v - cfg.ground.horizon_row) / cfg.ground.camera_height;
      const double z = cfg.ground.focal_px * cfg.ground.camera_height / (p.anchor.v - cfg.ground.horizon_row);
      if (p.pixel_height != expected || p.distance != z) ++law;
    }
  }
  const bool pass = placements > 0 && violations == 0 && law == 0;
  return {pass, fmt::format("{} placements in 100 scenes: {} invariant violations, {} scale-law deviations",
                            placements, violations, law)};
}

// 6. Bboxes, visibility and COCO round trip on 50 composed images.
Outcome annotation_integrity() {
  const fs::path dir = synth::fresh_dir("acceptance-a6");
  std::vector<synth::Figure> figs;
  std::vector<ModelInfo> models;
  for (int i = 0; i < 5; ++i) {
    synth::FigureStyle style;
    style.girth = 0.85 + 0.08 * i;
    style.shirt = Vec3(0.15 + 0.15 * i, 0.8 - 0.12 * i, 0.3);
    figs.push_back(synth::make_figure(style));
    const Vec3 ext = compute_bounds(figs.back().mesh).extent();
    models.push_back(ModelInfo{i, ext.y(), ext.x(), ext.z()});
  }
  std::mt19937_64 rng(606);
  int bbox_mismatch = 0, visible = 0, visible_ok = 0, persons = 0;
  std::vector<CocoImage> images;
  for (int img = 0; img < 50; ++img) {
    const int w = 640, h = 480;
    const SegMask mask = synth::street_mask(w, h, 2000 + img);
    PlacementConfig cfg;
    cfg.valid_class_ids = {7, 8};
    cfg.ground = default_ground_model(w, h);
    cfg.max_persons = 5;
    cfg.max_bbox_iou = 0.5;
    const PlacementPlan plan = plan_scene("a6", mask, models, cfg, rng());
    std::vector<PersonSprite> sprites;
    for (const Placement& p : plan.placements) {
      const synth::Figure& f = figs[p.model_id];
      const SpriteRequest req{p.yaw, p.pixel_height, p.distance, p.person_height_m, cfg.ground.camera_height};
      sprites.push_back(render_person_sprite(f.mesh, synth::as_joint_set(f.joints), req));
    }
    const SceneComposite scene = composite_scene(synth::noise_image(w, h, img), plan, sprites);
    const auto records = annotate(plan, sprites, scene, {1, 2, 3, 4, 5});
    for (const AnnotationRecord& r : records) {
      ++persons;
      const Framebuffer& fb = sprites[r.person_index].framebuffer;
      const auto [ox, oy] = scene.offsets[r.person_index];
      int x0 = w, y0 = h, x1 = -1, y1 = -1;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const int sx = x - ox, sy = y - oy;
          if (sx < 0 || sy < 0 || sx >= fb.width || sy >= fb.height || fb.rgba[fb.index(sx, sy) * 4 + 3] == 0) continue;
          x0 = std::min(x0, x);
          y0 = std::min(y0, y);
          x1 = std::max(x1, x);
          y1 = std::max(y1, y);
        }
      }
      bbox_mismatch += !(r.bbox == PixelBox{x0, y0, x1 - x0 + 1, y1 - y0 + 1});
      for (const Keypoint& k : r.keypoints) {
        if (k.visibility != 2) continue;
        ++visible;
        const int ru = static_cast<int>(std::floor(k.u + 0.5)), rv = static_cast<int>(std::floor(k.v + 0.5));
        bool ok = false;
        for (int dy = -2; dy <= 2 && !ok; ++dy) {
          for (int dx = -2; dx <= 2 && !ok; ++dx) {
            const int x = ru + dx, y = rv + dy;
            ok = dx * dx + dy * dy <= 4 && x >= 0 && y >= 0 && x < w && y < h &&
                 scene.owner_at(x, y) == r.person_index;
          }
        }
        visible_ok += ok;
      }
    }
    images.push_back(CocoImage{fmt::format("img_{:06d}.png", img), w, h, records});
  }

  write_coco(images, dir / "a6.json");
  std::string reader = "ok";
  int row_mismatch = 0;
  try {
    const auto rows = synth::read_coco_with_python(dir / "a6.json");
    std::vector<synth::CocoRow> expected;
    for (const CocoImage& im : images) {
      for (const AnnotationRecord& r : im.records) expected.push_back(synth::expected_row(im.file_name, r));
    }
    if (rows.size() != expected.size()) {
      reader = fmt::format("row count {} vs {}", rows.size(), expected.size());
    } else {
      for (std::size_t i = 0; i < rows.size(); ++i) row_mismatch += !(rows[i] == expected[i]);
    }
  } catch (const std::exception& e) {
    reader = e.what();
  }
  fs::remove_all(dir);
  const double ratio = visible ? static_cast<double>(visible_ok) / visible : 0.0;
  const bool pass = persons > 0 && bbox_mismatch == 0 && ratio >= 0.99 && reader == "ok" && row_mismatch == 0;
  return {pass, fmt::format("{} persons: bbox mismatches {}, visible keypoints in dilated owned region {}/{} "
                            "({:.4f} >= 0.99), COCO reader {}, value mismatches {}",
                            persons, bbox_mismatch, visible_ok, visible, ratio, reader, row_mismatch)};
}

// 7. generate on a 50-image manifest: wall time and byte reproducibility.
Outcome generate_determinism(double& timed_s) {
  const fs::path dir = synth::fresh_dir("acceptance-a7");
  synth::FixtureOptions opts;  // 5 backgrounds, 5 models, 640x480, 50 images
  const DatasetManifest m = load_manifest(synth::write_fixture(dir / "in", opts));
  const auto start = std::chrono::steady_clock::now();
  const GenerateReport r4 = generate(m, GenerateOptions{dir / "w4a", std::nullopt, 4});
  timed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  generate(m, GenerateOptions{dir / "w4b", std::nullopt, 4});
  generate(m, GenerateOptions{dir / "w1", std::nullopt, 1});
  const std::string runs = synth::compare_trees(dir / "w4a", dir / "w4b");
  const std::string workers = synth::compare_trees(dir / "w4a", dir / "w1");
  fs::remove_all(dir);
  const bool pass = r4.written == 50 && r4.failed == 0 && runs.empty() && workers.empty() && timed_s < 60.0;
  return {pass, fmt::format("{} images written, {} failed; 4-worker run {:.2f} s (< 60 s, {} hardware thread(s)); "
                            "run vs run: {}; 1 vs 4 workers: {}",
                            r4.written, r4.failed, timed_s, std::thread::hardware_concurrency(),
                            runs.empty() ? "identical" : runs, workers.empty() ? "identical" : workers)};
}

// 8. Split arithmetic without images.
Outcome split_arithmetic() {
  std::vector<int> ids(50000);
  for (int i = 0; i < 50000; ++i) ids[i] = i;
  const Split s = split_dataset(ids, 0.8, 42);
  std::vector<int> all = s.train;
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  const bool pass = s.train.size() == 40000 && s.test.size() == 10000 && all == ids;
  return {pass, fmt::format("train {} / test {} (expected 40000 / 10000), partition {}", s.train.size(),
                            s.test.size(), all == ids ? "complete" : "broken")};
}

}  // namespace

int main() {
  double a7_time = 0.0;
  const std::vector<Criterion> criteria = {
      {"A1", "triangulation exactness", 5.0, triangulation_exactness},
      {"A2", "view-count monotonicity", 60.0, view_count_monotonicity},
      {"A3", "solver vs brute-force oracle", 30.0, solver_oracle_equivalence},
      {"A4", "rasterizer coverage and depth", 60.0, rasterizer_correctness},
      {"A5", "placement validity", 0.0, placement_validity},
      {"A6", "annotation integrity", 0.0, annotation_integrity},
      {"A7", "generate determinism and throughput", 0.0, [&] { return generate_determinism(a7_time); }},
      {"A8", "split arithmetic", 0.0, split_arithmetic},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fmt::format("{:.2f} s", secs);
    if (c.time_limit_s > 0.0) {
      timing += fmt::format(" (< {:.0f} s)", c.time_limit_s);
      if (secs >= c.time_limit_s) out.pass = false;
    }
    failed += !out.pass;
    std::printf("[%s] %s %s: %s; %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name, out.detail.c_str(), timing.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
