#include "hforge/compose.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include <Eigen/Geometry>
#include <spdlog/spdlog.h>

#include "hforge/error.hpp"

namespace hforge {
namespace {

constexpr int kSpriteMargin = 2;

int round_px(double value) { return static_cast<int>(std::floor(value + 0.5)); }

Mat3 yaw_rotation(double yaw) { return Eigen::AngleAxisd(yaw, Vec3::UnitY()).toRotationMatrix(); }

// Sort key for painter's order: smaller means nearer to the camera.
struct DepthKey {
  double distance;
  double depth;
  int v;
  int u;
  int model;
  double yaw;

  bool nearer_than(const DepthKey& o) const {
    return std::tie(distance, depth, v, u, model, yaw) < std::tie(o.distance, o.depth, o.v, o.u, o.model, o.yaw);
  }
};

void put_pixel(RgbImage& img, int x, int y, const std::array<std::uint8_t, 3>& c) {
  if (!img.contains(x, y)) return;
  std::uint8_t* p = img.at(x, y);
  p[0] = c[0];
  p[1] = c[1];
  p[2] = c[2];
}

void draw_line(RgbImage& img, int x0, int y0, int x1, int y1, const std::array<std::uint8_t, 3>& c) {
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    put_pixel(img, x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void draw_rect(RgbImage& img, double x, double y, double w, double h, const std::array<std::uint8_t, 3>& c) {
  const int x0 = round_px(x);
  const int y0 = round_px(y);
  const int x1 = round_px(x + w) - 1;
  const int y1 = round_px(y + h) - 1;
  draw_line(img, x0, y0, x1, y0, c);
  draw_line(img, x1, y0, x1, y1, c);
  draw_line(img, x1, y1, x0, y1, c);
  draw_line(img, x0, y1, x0, y0, c);
}

}  // namespace

Vec3 PersonSprite::place(const Vec3& model_point) const {
  return yaw_rotation(yaw) * (scale * model_point) + Vec3(0.0, 0.0, distance);
}

PersonSprite render_person_sprite(const Mesh& mesh, const JointSet3D& skeleton, const SpriteRequest& request,
                                  const RenderConfig& cfg) {
  if (!(request.pixel_height >= 1.0)) throw Error(ErrorCode::InvalidArgument, "pixel_height must be >= 1");
  if (!(request.distance > 0.0) || !(request.person_height_m > 0.0) || !(request.camera_height > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sprite distance, person height and camera height must be positive");
  }
  mesh.validate();
  const Aabb bounds = compute_bounds(mesh);
  const double model_height = bounds.extent().y();
  if (!(model_height > 1e-12)) throw Error(ErrorCode::DegenerateMesh, "mesh has no vertical extent");

  PersonSprite sprite;
  sprite.yaw = std::fmod(request.yaw, 2.0 * std::numbers::pi);
  if (sprite.yaw < 0.0) sprite.yaw += 2.0 * std::numbers::pi;
  sprite.scale = request.person_height_m / model_height;
  sprite.distance = request.distance;
  sprite.pose.position = Vec3(0.0, -request.camera_height, 0.0);

  Mesh placed = mesh;
  const Mat3 rot = yaw_rotation(sprite.yaw);
  for (Vec3& v : placed.vertices) v = sprite.place(v);
  for (Vec3& n : placed.normals) n = rot * n;

  // The camera is level with no rotation, so camera coordinates are a shift.
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -x_lo;
  double y_lo = x_lo;
  double y_hi = -x_lo;
  double z_lo = x_lo;
  double z_hi = 0.0;
  for (const Vec3& v : placed.vertices) {
    const Vec3 q = v - sprite.pose.position;
    z_lo = std::min(z_lo, q.z());
    z_hi = std::max(z_hi, q.z());
    if (!(q.z() > 0.0)) continue;
    x_lo = std::min(x_lo, q.x() / q.z());
    x_hi = std::max(x_hi, q.x() / q.z());
    y_lo = std::min(y_lo, q.y() / q.z());
    y_hi = std::max(y_hi, q.y() / q.z());
  }
  const double z_near = 0.01;
  if (!(z_lo > z_near)) {
    throw Error(ErrorCode::InvalidArgument, "figure reaches behind the sprite camera; distance too small");
  }

  const double f = request.pixel_height / (y_hi - y_lo);
  const double ground_rel = f * request.camera_height / request.distance;
  const double top_rel = std::min(f * y_lo - ground_rel, -ground_rel);
  const double bottom_rel = std::max(f * y_hi - ground_rel, 0.0);

  sprite.ground_x = static_cast<int>(std::ceil(-f * x_lo + kSpriteMargin));
  sprite.ground_y = static_cast<int>(std::ceil(-top_rel + kSpriteMargin));
  CameraIntrinsics& intr = sprite.intrinsics;
  intr.fx = intr.fy = f;
  intr.cx = sprite.ground_x;
  intr.cy = sprite.ground_y - ground_rel;
  intr.width = sprite.ground_x + static_cast<int>(std::ceil(f * x_hi + kSpriteMargin)) + 1;
  intr.height = sprite.ground_y + static_cast<int>(std::ceil(bottom_rel + kSpriteMargin)) + 1;
  intr.z_near = z_near;
  intr.z_far = std::max(100.0, 2.0 * z_hi);

  sprite.framebuffer = render_mesh(placed, intr, sprite.pose, cfg);
  for (int s = 0; s < coco::kNumKeypoints; ++s) {
    const JointEstimate& j = skeleton[s];
    if (!j.resolved()) continue;
    const Vec3 world = sprite.place(*j.position);
    if (!(world_to_camera(sprite.pose, world).z() > 0.0)) continue;
    sprite.joints[s] = project(intr, sprite.pose, world);
  }
  return sprite;
}

LabelImage SceneComposite::ownership_labels() const {
  LabelImage out(image.width, image.height);
  for (std::size_t i = 0; i < owner.size(); ++i) out.labels[i] = static_cast<std::uint16_t>(owner[i] + 1);
  return out;
}

SceneComposite composite_scene(const RgbImage& background, const PlacementPlan& plan,
                               const std::vector<PersonSprite>& sprites) {
  if (sprites.size() != plan.placements.size()) {
    throw Error(ErrorCode::InvalidArgument, "sprite count does not match the plan");
  }
  if (sprites.size() > 32767) throw Error(ErrorCode::InvalidArgument, "too many persons in one scene");
  SceneComposite out;
  out.image = background;
  out.owner.assign(static_cast<std::size_t>(background.width) * background.height, kNoOwner);

  struct Rect {
    int x0, y0, x1, y1;  // inclusive bounds in the background frame
  };
  std::vector<Rect> rects;
  for (std::size_t i = 0; i < sprites.size(); ++i) {
    const Placement& p = plan.placements[i];
    const PersonSprite& s = sprites[i];
    const int ox = p.anchor.u - s.ground_x;
    const int oy = p.anchor.v - s.ground_y;
    out.offsets.push_back({ox, oy});
    rects.push_back(Rect{std::max(ox, 0), std::max(oy, 0), std::min(ox + s.framebuffer.width, background.width) - 1,
                         std::min(oy + s.framebuffer.height, background.height) - 1});
  }

  auto key_of = [&](std::size_t i, std::size_t src_index) {
    const Placement& p = plan.placements[i];
    return DepthKey{p.distance, sprites[i].framebuffer.depth[src_index], p.anchor.v, p.anchor.u, p.model_id, p.yaw};
  };

  std::vector<std::pair<std::size_t, std::size_t>> covering;  // (person, sprite pixel index)
  for (int y = 0; y < background.height; ++y) {
    for (int x = 0; x < background.width; ++x) {
      covering.clear();
      for (std::size_t i = 0; i < sprites.size(); ++i) {
        const Rect& r = rects[i];
        if (x < r.x0 || x > r.x1 || y < r.y0 || y > r.y1) continue;
        const Framebuffer& fb = sprites[i].framebuffer;
        const std::size_t si = fb.index(x - out.offsets[i][0], y - out.offsets[i][1]);
        if (fb.rgba[si * 4 + 3] == 0) continue;
        covering.emplace_back(i, si);
      }
      if (covering.empty()) continue;
      // Far-to-near: the nearest covering person is blended last and owns the pixel.
      std::sort(covering.begin(), covering.end(), [&](const auto& a, const auto& b) {
        return key_of(b.first, b.second).nearer_than(key_of(a.first, a.second));
      });
      std::uint8_t* d = out.image.at(x, y);
      for (const auto& [i, si] : covering) {
        const std::uint8_t* s = &sprites[i].framebuffer.rgba[si * 4];
        for (int k = 0; k < 3; ++k) d[k] = blend_channel(s[k], d[k], s[3]);
      }
      out.owner[static_cast<std::size_t>(y) * background.width + x] = static_cast<std::int16_t>(covering.back().first);
    }
  }
  return out;
}

void AnnotationRecord::validate(int image_width, int image_height) const {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::InvariantViolation, "annotation for person " + std::to_string(person_index) + ": " + what);
  };
  if (bbox.w < 1 || bbox.h < 1) fail("empty bbox");
  if (bbox.x < 0 || bbox.y < 0 || bbox.x + bbox.w > image_width || bbox.y + bbox.h > image_height) {
    fail("bbox outside the image");
  }
  if (area <= 0 || area > static_cast<long>(bbox.w) * bbox.h) fail("area inconsistent with bbox");
  int labeled = 0;
  for (const Keypoint& k : keypoints) {
    if (k.visibility < 0 || k.visibility > 2) fail("visibility flag outside {0, 1, 2}");
    if (k.visibility > 0) {
      ++labeled;
      if (!std::isfinite(k.u) || !std::isfinite(k.v)) fail("non-finite keypoint");
    }
    if (k.visibility == 2) {
      const int ru = round_px(k.u);
      const int rv = round_px(k.v);
      const int t = kVisibilityTolerancePx;
      if (ru < bbox.x - t || ru > bbox.x + bbox.w - 1 + t || rv < bbox.y - t || rv > bbox.y + bbox.h - 1 + t) {
        fail("visible keypoint outside the dilated bbox");
      }
    }
  }
  if (labeled != num_keypoints) fail("num_keypoints disagrees with visibility flags");
  if (face_bbox) {
    const BBox& f = *face_bbox;
    if (!(f.w > 0.0 && f.h > 0.0) || f.x < 0.0 || f.y < 0.0 || f.x + f.w > image_width || f.y + f.h > image_height) {
      fail("face bbox outside the image");
    }
  }
}

std::vector<AnnotationRecord> annotate(const PlacementPlan& plan, const std::vector<PersonSprite>& sprites,
                                       const SceneComposite& scene, const std::vector<int>& identity_of_model) {
  const int width = scene.image.width;
  const int height = scene.image.height;
  std::vector<AnnotationRecord> records;
  for (std::size_t i = 0; i < sprites.size(); ++i) {
    const PersonSprite& sprite = sprites[i];
    const Framebuffer& fb = sprite.framebuffer;
    const auto [ox, oy] = scene.offsets[i];
    const auto self = static_cast<std::int16_t>(i);

    int x0 = width, y0 = height, x1 = -1, y1 = -1;
    long area = 0;
    for (int sy = 0; sy < fb.height; ++sy) {
      const int y = sy + oy;
      if (y < 0 || y >= height) continue;
      for (int sx = 0; sx < fb.width; ++sx) {
        const int x = sx + ox;
        if (x < 0 || x >= width || !fb.covered(sx, sy)) continue;
        ++area;
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
    }
    if (area == 0) {
      spdlog::warn("annotate: person {} of '{}' is entirely outside the frame; dropped", i, plan.background_id);
      continue;
    }
    const bool owns_any = std::find(scene.owner.begin(), scene.owner.end(), self) != scene.owner.end();
    if (!owns_any) continue;

    AnnotationRecord rec;
    rec.person_index = static_cast<int>(i);
    const int model = plan.placements[i].model_id;
    rec.identity_id = model >= 0 && model < static_cast<int>(identity_of_model.size()) ? identity_of_model[model] : model;
    rec.bbox = PixelBox{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
    rec.area = area;

    auto owned_near = [&](int px, int py) {
      const int t = kVisibilityTolerancePx;
      for (int dy = -t; dy <= t; ++dy) {
        for (int dx = -t; dx <= t; ++dx) {
          if (dx * dx + dy * dy > t * t) continue;
          const int x = px + dx;
          const int y = py + dy;
          if (x >= 0 && y >= 0 && x < width && y < height && scene.owner_at(x, y) == self) return true;
        }
      }
      return false;
    };
    for (int s = 0; s < coco::kNumKeypoints; ++s) {
      Keypoint& kp = rec.keypoints[s];
      if (!sprite.joints[s]) continue;
      const double u = sprite.joints[s]->u + ox;
      const double v = sprite.joints[s]->v + oy;
      const int ru = round_px(u);
      const int rv = round_px(v);
      if (ru < 0 || rv < 0 || ru >= width || rv >= height) continue;
      kp = Keypoint{u, v, owned_near(ru, rv) ? 2 : 1};
      ++rec.num_keypoints;
    }

    double fx0 = 1e300, fy0 = 1e300, fx1 = -1e300, fy1 = -1e300;
    int head = 0;
    for (int s : coco::kHeadKeypoints) {
      const Keypoint& kp = rec.keypoints[s];
      if (kp.visibility == 0) continue;
      ++head;
      fx0 = std::min(fx0, kp.u);
      fx1 = std::max(fx1, kp.u);
      fy0 = std::min(fy0, kp.v);
      fy1 = std::max(fy1, kp.v);
    }
    if (head >= 2) {
      const double side = std::max(1.0, kFaceBoxScale * std::max(fx1 - fx0, fy1 - fy0));
      const double cx = 0.5 * (fx0 + fx1);
      const double cy = 0.5 * (fy0 + fy1);
      const double left = std::max(0.0, cx - 0.5 * side);
      const double top = std::max(0.0, cy - 0.5 * side);
      const double right = std::min(static_cast<double>(width), cx + 0.5 * side);
      const double bottom = std::min(static_cast<double>(height), cy + 0.5 * side);
      if (right > left && bottom > top) rec.face_bbox = BBox{left, top, right - left, bottom - top};
    }
    records.push_back(rec);
  }
  return records;
}

RgbImage draw_overlay(const RgbImage& image, const std::vector<AnnotationRecord>& records) {
  RgbImage out = image;
  constexpr std::array<std::uint8_t, 3> kBox{255, 40, 40};
  constexpr std::array<std::uint8_t, 3> kLimb{240, 240, 240};
  constexpr std::array<std::uint8_t, 3> kVisible{40, 220, 40};
  constexpr std::array<std::uint8_t, 3> kOccluded{255, 160, 0};
  constexpr std::array<std::uint8_t, 3> kFace{60, 120, 255};
  for (const AnnotationRecord& rec : records) {
    draw_rect(out, rec.bbox.x, rec.bbox.y, rec.bbox.w, rec.bbox.h, kBox);
    if (rec.face_bbox) draw_rect(out, rec.face_bbox->x, rec.face_bbox->y, rec.face_bbox->w, rec.face_bbox->h, kFace);
    for (const auto& [a, b] : coco::kSkeleton) {
      const Keypoint& ka = rec.keypoints[a - 1];
      const Keypoint& kb = rec.keypoints[b - 1];
      if (ka.visibility == 0 || kb.visibility == 0) continue;
      draw_line(out, round_px(ka.u), round_px(ka.v), round_px(kb.u), round_px(kb.v), kLimb);
    }
    for (const Keypoint& kp : rec.keypoints) {
      if (kp.visibility == 0) continue;
      const auto& color = kp.visibility == 2 ? kVisible : kOccluded;
      for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
          if (dx * dx + dy * dy <= 4) put_pixel(out, round_px(kp.u) + dx, round_px(kp.v) + dy, color);
        }
      }
    }
  }
  return out;
}

}  // namespace hforge
