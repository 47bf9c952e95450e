#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hforge/geometry.hpp"
#include "hforge/image.hpp"
#include "hforge/keypoints.hpp"
#include "hforge/mesh.hpp"
#include "hforge/render.hpp"

namespace hforge {

struct Detection2D {
  int joint_id = 0;
  double u = 0.0;
  double v = 0.0;
  double confidence = 1.0;

  bool operator==(const Detection2D&) const = default;
};

/// N >= 2 distinct camera poses sharing one set of intrinsics.
struct ViewRig {
  CameraIntrinsics intrinsics;
  std::vector<CameraPose> poses;

  void validate() const;
};

struct JointEstimate {
  std::optional<Vec3> position;
  double rms_residual = std::numeric_limits<double>::quiet_NaN();
  int supporting_views = 0;

  bool resolved() const { return position.has_value(); }
};

using JointSet3D = std::array<JointEstimate, coco::kNumKeypoints>;

struct SkeletonConfig {
  double min_confidence = 0.3;
  /// Rays farther than outlier_k x median distance are dropped in one
  /// re-solve pass; infinity disables the pass.
  double outlier_k = 3.0;
  RenderConfig render;
  /// Views rendered and detected concurrently.
  int threads = 1;
};

/// What a detector is told about the view it is looking at. Image-based
/// detectors only use `index` for bookkeeping.
struct ViewContext {
  std::size_t index = 0;
  const CameraIntrinsics* intrinsics = nullptr;
  const CameraPose* pose = nullptr;
};

/// 2D keypoint estimator plugged into the multi-view pipeline. Must return at
/// most one detection per joint; `estimate_skeleton` enforces this anyway.
class Detector {
 public:
  virtual ~Detector() = default;
  /// False for detectors that never look at pixels; rendering is skipped.
  virtual bool needs_image() const { return true; }
  virtual std::vector<Detection2D> detect(const RgbImage& image, const ViewContext& view) = 0;
};

/// Keeps the highest-confidence detection per joint id (first wins on ties),
/// ordered by joint id.
std::vector<Detection2D> keep_best_per_joint(std::span<const Detection2D> detections);

/// Cameras on a circle around `target` at azimuths 2*pi*i/n, raised by
/// `elevation`, each looking straight at the target.
ViewRig make_ring_rig(int n_views, double radius, const Vec3& target, double elevation,
                      const CameraIntrinsics& intr);

/// 24 views at elevation 0, radius 1.5 x model height, 512x512 at f = 500 px,
/// aimed at the middle of a normalized model of the given height.
ViewRig default_rig(double model_height, int n_views = 24);

/// Multi-view triangulation of every COCO joint: render each view, detect,
/// unproject confident detections to rays, and solve per joint.
/// Throws Error(AllViewsFailed) when fewer than two views produce a result.
JointSet3D estimate_skeleton(const Mesh& mesh, const ViewRig& rig, Detector& detector,
                             const SkeletonConfig& cfg = {});

/// Ground-truth joints projected through the camera with isotropic Gaussian
/// pixel noise; each detection is dropped with probability drop_prob.
/// Joints behind the camera are never detected.
std::vector<Detection2D> oracle_detect(std::span<const Vec3> gt_joints, const CameraIntrinsics& intr,
                                       const CameraPose& pose, double noise_sigma, double drop_prob,
                                       std::uint64_t seed);

class OracleDetector final : public Detector {
 public:
  OracleDetector(std::vector<Vec3> gt_joints, double noise_sigma = 0.0, double drop_prob = 0.0,
                 std::uint64_t seed = 0);

  bool needs_image() const override { return false; }
  std::vector<Detection2D> detect(const RgbImage& image, const ViewContext& view) override;

 private:
  std::vector<Vec3> gt_joints_;
  double noise_sigma_;
  double drop_prob_;
  std::uint64_t seed_;
};

struct ExternalDetectorConfig {
  /// Shell command; the exchange-file path is appended as its last argument
  /// and the image path is exported as HFORGE_IMAGE.
  std::string command;
  std::chrono::milliseconds timeout{60'000};
  /// Allow concurrent invocations.
  bool reentrant = false;
  std::array<std::uint8_t, 3> background{0, 0, 0};
};

/// Runs the detector command on an existing image file and parses its
/// keypoint exchange file. Throws Error(Spawn), Error(Protocol) or
/// Error(Timeout).
std::vector<Detection2D> external_detect(const std::filesystem::path& image_path,
                                         const ExternalDetectorConfig& cfg);

/// `joint_id u v confidence` per line, '#' comments and blank lines allowed.
/// Duplicate joints keep the most confident entry.
std::vector<Detection2D> parse_keypoint_exchange(std::istream& in, const std::string& source);

class ExternalDetector final : public Detector {
 public:
  explicit ExternalDetector(ExternalDetectorConfig cfg);
  std::vector<Detection2D> detect(const RgbImage& image, const ViewContext& view) override;

 private:
  ExternalDetectorConfig cfg_;
  std::mutex mutex_;
};

/// JSON sidecar: {"format", "version", "joints": [{joint_id, name, xyz|null,
/// residual|null, views}]}.
void write_skeleton_sidecar(const std::filesystem::path& path, const JointSet3D& joints);
JointSet3D read_skeleton_sidecar(const std::filesystem::path& path);

}  // namespace hforge
