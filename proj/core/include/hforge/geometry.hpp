#pragma once

#include <span>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace hforge {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Camera frame: right-handed, +Z forward, +X right, +Y down.
struct CameraIntrinsics {
  double fx = 500.0;
  double fy = 500.0;
  double cx = 256.0;
  double cy = 256.0;
  int width = 512;
  int height = 512;
  double z_near = 0.1;
  double z_far = 100.0;

  /// Throws Error(InvalidArgument) when any invariant is broken.
  void validate() const;
};

/// Camera placement in the world. The orientation is the camera-to-world
/// rotation built from intrinsic Euler angles applied yaw (about Y), then
/// pitch (about X), then roll (about Z).
struct CameraPose {
  Vec3 position = Vec3::Zero();
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  Mat3 rotation() const;
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();

  /// Line through `from` heading toward `to`; direction is normalized.
  static Ray through(const Vec3& from, const Vec3& to);

  Vec3 at(double t) const { return origin + t * direction; }
  double distance_to(const Vec3& point) const;
};

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

struct LineFit {
  Vec3 point = Vec3::Zero();
  double rms_residual = 0.0;
};

Vec3 world_to_camera(const CameraPose& pose, const Vec3& point);
Vec3 camera_to_world(const CameraPose& pose, const Vec3& point);

/// Pinhole projection. Throws Error(BehindCamera) when the camera-frame depth
/// is not positive.
Projection project(const CameraIntrinsics& intr, const CameraPose& pose, const Vec3& point);

/// Ray from the near-plane point through the far-plane point of pixel (u, v).
Ray unproject(const CameraIntrinsics& intr, const CameraPose& pose, double u, double v);

/// Least-squares point closest to all lines, solved through the 3x3 normal
/// system sum(I - d d^T) x = sum(I - d d^T) a.
///
/// Throws Error(TooFewRays) for fewer than two rays and
/// Error(DegenerateConfiguration) when the normal matrix's eigenvalue ratio
/// falls below kDegenerateEigenRatio (near-parallel lines).
LineFit nearest_point_to_lines(std::span<const Ray> rays);

inline constexpr double kDegenerateEigenRatio = 1e-9;

}  // namespace hforge
