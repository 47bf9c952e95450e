#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hforge/image.hpp"

namespace hforge {

using SegMask = LabelImage;

/// Row-major boolean mask.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  std::size_t count() const;

  bool operator==(const BinaryMask&) const = default;
};

struct HeightDistribution {
  double mean = 1.70;
  double std = 0.08;
  double min = 1.50;
  double max = 1.95;
};

/// Flat-ground pinhole calibration of one background: horizon row, camera
/// height above ground (meters) and focal length (pixels).
struct GroundModel {
  double horizon_row = 0.0;
  double camera_height = 1.5;
  double focal_px = 1.0;

  bool operator==(const GroundModel&) const = default;
};

struct PlacementConfig {
  std::set<int> valid_class_ids;
  std::set<int> person_class_ids;
  GroundModel ground;
  HeightDistribution person_height;
  int min_persons = 1;
  int max_persons = 5;
  double min_anchor_separation = 20.0;
  double max_bbox_iou = 0.3;
  double min_pixel_height = 24.0;
  double max_pixel_height = 1e9;
  int attempts_per_slot = 100;

  void validate() const;
};

/// Defaults for a background of the given size: horizon at 0.45 x height,
/// camera 1.5 m above ground, focal length 0.9 x width.
GroundModel default_ground_model(int width, int height);

struct Anchor {
  int u = 0;
  int v = 0;

  bool operator==(const Anchor&) const = default;
};

struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool operator==(const BBox&) const = default;
};

double iou(const BBox& a, const BBox& b);

/// Footprint of a normalized model used to predict its on-screen box.
struct ModelInfo {
  int model_id = 0;
  double height = 1.0;   // vertical extent
  double width_x = 0.4;  // horizontal extents before yaw
  double depth_z = 0.3;

  /// Horizontal extent after rotating by `yaw` about the vertical axis,
  /// relative to the model height.
  double aspect(double yaw) const;
};

struct Placement {
  int model_id = 0;
  Anchor anchor;
  double yaw = 0.0;
  double person_height_m = 0.0;
  double pixel_height = 0.0;
  double distance = 0.0;  // camera distance Z in meters
  BBox predicted_bbox;

  bool operator==(const Placement&) const = default;
};

/// Placements sorted far-to-near (decreasing distance).
struct PlacementPlan {
  std::string background_id;
  GroundModel ground;
  std::uint64_t seed = 0;
  int requested = 0;
  std::vector<Placement> placements;

  bool operator==(const PlacementPlan&) const = default;
};

struct ScaleAtRow {
  double pixel_height = 0.0;
  double distance = 0.0;
};

BinaryMask valid_region(const SegMask& mask, const PlacementConfig& cfg);

bool has_person(const SegMask& mask, const PlacementConfig& cfg);

/// Flat-ground perspective: Z = f*h_c/(v_foot - v_h) and
/// pixel_height = person_height * (v_foot - v_h) / h_c.
/// Throws Error(AboveHorizon) when v_foot <= v_h.
ScaleAtRow scale_at_row(const GroundModel& ground, double v_foot, double person_height_m);

/// Uniform draw among the set pixels of `region` (row-major index order).
Anchor sample_anchor(const std::vector<Anchor>& pixels, std::mt19937_64& rng);

std::vector<Anchor> region_pixels(const BinaryMask& region);

/// Rejection-samples up to k ~ U[min_persons, max_persons] placements.
/// Throws Error(NoValidRegion) or Error(EmptyModelPool).
PlacementPlan plan_scene(const std::string& background_id, const SegMask& mask, const std::vector<ModelInfo>& models,
                         const PlacementConfig& cfg, std::uint64_t seed);

}  // namespace hforge
