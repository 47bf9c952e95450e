#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "hforge/geometry.hpp"
#include "hforge/image.hpp"
#include "hforge/keypoints.hpp"
#include "hforge/mesh.hpp"
#include "hforge/placement.hpp"
#include "hforge/render.hpp"
#include "hforge/skeleton.hpp"

namespace hforge {

/// How one figure is viewed: yawed about its vertical axis, scaled to
/// `person_height_m` and seen from `distance` meters by a level camera
/// `camera_height` meters above the ground.
struct SpriteRequest {
  double yaw = 0.0;
  double pixel_height = 100.0;
  double distance = 10.0;
  double person_height_m = 1.7;
  double camera_height = 1.5;
};

struct PersonSprite {
  Framebuffer framebuffer;
  std::array<std::optional<Projection>, coco::kNumKeypoints> joints;
  /// Sprite pixel where the ground point below the figure projects; it is
  /// mapped onto the placement anchor.
  int ground_x = 0;
  int ground_y = 0;
  double distance = 0.0;
  CameraIntrinsics intrinsics;
  CameraPose pose;
  double yaw = 0.0;  // reduced to [0, 2*pi)
  double scale = 1.0;

  /// Model-frame point to the sprite's world frame (the one `pose` lives in).
  Vec3 place(const Vec3& model_point) const;
};

/// Renders a normalized mesh so its projected vertical extent equals
/// `pixel_height`, and projects the skeleton with the same camera.
PersonSprite render_person_sprite(const Mesh& mesh, const JointSet3D& skeleton, const SpriteRequest& request,
                                  const RenderConfig& cfg = {});

inline constexpr std::int16_t kNoOwner = -1;

struct SceneComposite {
  RgbImage image;
  /// Per pixel, index into the plan of the front-most covering person.
  std::vector<std::int16_t> owner;
  /// Background position of each sprite's (0, 0) pixel.
  std::vector<std::array<int, 2>> offsets;

  std::int16_t owner_at(int x, int y) const { return owner[static_cast<std::size_t>(y) * image.width + x]; }
  LabelImage ownership_labels() const;  // owner + 1, 0 for background
};

/// Blends sprites far-to-near and resolves per-pixel ownership. A pixel
/// belongs to the covering person with the smallest distance; sprite depth
/// breaks ties between equally distant persons.
SceneComposite composite_scene(const RgbImage& background, const PlacementPlan& plan,
                               const std::vector<PersonSprite>& sprites);

struct PixelBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool operator==(const PixelBox&) const = default;
};

struct Keypoint {
  double u = 0.0;
  double v = 0.0;
  int visibility = 0;  // 0 unlabeled, 1 occluded, 2 visible

  bool operator==(const Keypoint&) const = default;
};

struct AnnotationRecord {
  int person_index = 0;
  int identity_id = 0;
  PixelBox bbox;
  std::array<Keypoint, coco::kNumKeypoints> keypoints{};
  int num_keypoints = 0;
  long area = 0;
  std::optional<BBox> face_bbox;

  /// Throws Error(InvariantViolation) when inconsistent with an image of the
  /// given size.
  void validate(int image_width, int image_height) const;

  bool operator==(const AnnotationRecord&) const = default;
};

inline constexpr double kFaceBoxScale = 1.6;
inline constexpr int kVisibilityTolerancePx = 2;

/// One record per person that owns at least one pixel. `identity_of_model`
/// maps placement model ids to identity ids.
std::vector<AnnotationRecord> annotate(const PlacementPlan& plan, const std::vector<PersonSprite>& sprites,
                                       const SceneComposite& scene, const std::vector<int>& identity_of_model);

/// Draws boxes, limbs and keypoints (green visible, orange occluded) over
/// a copy of the image.
RgbImage draw_overlay(const RgbImage& image, const std::vector<AnnotationRecord>& records);

}  // namespace hforge
