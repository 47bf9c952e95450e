#include "hforge/placement.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hforge/error.hpp"

namespace hforge {
namespace {

double truncated_normal(const HeightDistribution& dist, std::mt19937_64& rng) {
  if (!(dist.std > 0.0)) return std::clamp(dist.mean, dist.min, dist.max);
  std::normal_distribution<double> normal(dist.mean, dist.std);
  for (int i = 0; i < 1000; ++i) {
    const double h = normal(rng);
    if (h >= dist.min && h <= dist.max) return h;
  }
  // The window sits far in a tail; fall back to uniform over it.
  return std::uniform_real_distribution<double>(dist.min, dist.max)(rng);
}

}  // namespace

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

void PlacementConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "placement config: " + what); };
  if (!(ground.horizon_row >= 0.0)) fail("horizon_row must be >= 0");
  if (!(ground.camera_height > 0.0)) fail("camera_height must be > 0");
  if (!(ground.focal_px > 0.0)) fail("focal_px must be > 0");
  if (!(person_height.min <= person_height.max) || !(person_height.min > 0.0)) fail("bad person height bounds");
  if (!(person_height.std >= 0.0)) fail("person height std must be >= 0");
  if (min_persons < 0 || max_persons < min_persons) fail("bad persons_per_image range");
  if (!(max_bbox_iou >= 0.0 && max_bbox_iou <= 1.0)) fail("max_bbox_iou must lie in [0, 1]");
  if (!(min_anchor_separation >= 0.0)) fail("min_anchor_separation must be >= 0");
  if (!(min_pixel_height <= max_pixel_height)) fail("pixel height bounds out of order");
  if (attempts_per_slot < 1) fail("attempts_per_slot must be >= 1");
}

GroundModel default_ground_model(int width, int height) {
  return GroundModel{0.45 * height, 1.5, 0.9 * width};
}

double iou(const BBox& a, const BBox& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double ModelInfo::aspect(double yaw) const {
  return (std::abs(std::cos(yaw)) * width_x + std::abs(std::sin(yaw)) * depth_z) / height;
}

BinaryMask valid_region(const SegMask& mask, const PlacementConfig& cfg) {
  BinaryMask out{mask.width, mask.height, std::vector<std::uint8_t>(mask.labels.size(), 0)};
  for (int y = 0; y < mask.height; ++y) {
    if (!(y > cfg.ground.horizon_row)) continue;
    for (int x = 0; x < mask.width; ++x) {
      if (cfg.valid_class_ids.contains(mask.at(x, y))) out.bits[static_cast<std::size_t>(y) * mask.width + x] = 1;
    }
  }
  return out;
}

bool has_person(const SegMask& mask, const PlacementConfig& cfg) {
  return std::any_of(mask.labels.begin(), mask.labels.end(),
                     [&](std::uint16_t c) { return cfg.person_class_ids.contains(c); });
}

ScaleAtRow scale_at_row(const GroundModel& ground, double v_foot, double person_height_m) {
  const double below = v_foot - ground.horizon_row;
  if (!(below > 0.0)) {
    throw Error(ErrorCode::AboveHorizon, "foot row " + std::to_string(v_foot) + " is not below the horizon row " +
                                             std::to_string(ground.horizon_row));
  }
  return ScaleAtRow{person_height_m * below / ground.camera_height, ground.focal_px * ground.camera_height / below};
}

std::vector<Anchor> region_pixels(const BinaryMask& region) {
  std::vector<Anchor> out;
  for (int y = 0; y < region.height; ++y) {
    for (int x = 0; x < region.width; ++x) {
      if (region.at(x, y)) out.push_back(Anchor{x, y});
    }
  }
  return out;
}

Anchor sample_anchor(const std::vector<Anchor>& pixels, std::mt19937_64& rng) {
  if (pixels.empty()) throw Error(ErrorCode::NoValidRegion, "no pixel to sample");
  std::uniform_int_distribution<std::size_t> pick(0, pixels.size() - 1);
  return pixels[pick(rng)];
}

PlacementPlan plan_scene(const std::string& background_id, const SegMask& mask, const std::vector<ModelInfo>& models,
                         const PlacementConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (models.empty()) throw Error(ErrorCode::EmptyModelPool, "no models to place");
  const std::vector<Anchor> pixels = region_pixels(valid_region(mask, cfg));
  if (pixels.empty()) throw Error(ErrorCode::NoValidRegion, "background '" + background_id + "' has no valid pixels");

  std::mt19937_64 rng(seed);
  PlacementPlan plan;
  plan.background_id = background_id;
  plan.ground = cfg.ground;
  plan.seed = seed;
  plan.requested = std::uniform_int_distribution<int>(cfg.min_persons, cfg.max_persons)(rng);

  std::uniform_int_distribution<std::size_t> pick_model(0, models.size() - 1);
  std::uniform_real_distribution<double> pick_yaw(0.0, 2.0 * std::numbers::pi);
  for (int slot = 0; slot < plan.requested; ++slot) {
    for (int attempt = 0; attempt < cfg.attempts_per_slot; ++attempt) {
      Placement p;
      p.anchor = sample_anchor(pixels, rng);
      const ModelInfo& model = models[pick_model(rng)];
      p.model_id = model.model_id;
      p.yaw = pick_yaw(rng);
      p.person_height_m = truncated_normal(cfg.person_height, rng);

      const ScaleAtRow scale = scale_at_row(cfg.ground, p.anchor.v, p.person_height_m);
      p.pixel_height = scale.pixel_height;
      p.distance = scale.distance;
      if (p.pixel_height < cfg.min_pixel_height || p.pixel_height > cfg.max_pixel_height) continue;
      const double width = p.pixel_height * model.aspect(p.yaw);
      p.predicted_bbox = BBox{p.anchor.u - 0.5 * width, p.anchor.v - p.pixel_height, width, p.pixel_height};

      const bool clash = std::any_of(plan.placements.begin(), plan.placements.end(), [&](const Placement& q) {
        const double du = p.anchor.u - q.anchor.u;
        const double dv = p.anchor.v - q.anchor.v;
        return std::hypot(du, dv) < cfg.min_anchor_separation || iou(p.predicted_bbox, q.predicted_bbox) > cfg.max_bbox_iou;
      });
      if (clash) continue;
      plan.placements.push_back(p);
      break;
    }
  }
  std::stable_sort(plan.placements.begin(), plan.placements.end(),
                   [](const Placement& a, const Placement& b) { return a.distance > b.distance; });
  return plan;
}

}  // namespace hforge
