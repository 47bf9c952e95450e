#include "hforge/geometry.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "hforge/error.hpp"

namespace hforge {

void CameraIntrinsics::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "camera intrinsics: " + what); };
  if (!(fx > 0.0) || !(fy > 0.0)) fail("focal lengths must be positive");
  if (width <= 0 || height <= 0) fail("image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) fail("principal point outside the image");
  if (!(z_near > 0.0) || !(z_far > z_near)) fail("require z_far > z_near > 0");
}

Mat3 CameraPose::rotation() const {
  return (Eigen::AngleAxisd(yaw, Vec3::UnitY()) * Eigen::AngleAxisd(pitch, Vec3::UnitX()) *
          Eigen::AngleAxisd(roll, Vec3::UnitZ()))
      .toRotationMatrix();
}

Ray Ray::through(const Vec3& from, const Vec3& to) {
  return Ray{from, (to - from).normalized()};
}

double Ray::distance_to(const Vec3& point) const {
  const Vec3 offset = point - origin;
  return (offset - offset.dot(direction) * direction).norm();
}

Vec3 world_to_camera(const CameraPose& pose, const Vec3& point) {
  return pose.rotation().transpose() * (point - pose.position);
}

Vec3 camera_to_world(const CameraPose& pose, const Vec3& point) {
  return pose.rotation() * point + pose.position;
}

Projection project(const CameraIntrinsics& intr, const CameraPose& pose, const Vec3& point) {
  const Vec3 pc = world_to_camera(pose, point);
  if (!(pc.z() > 0.0)) {
    throw Error(ErrorCode::BehindCamera, "camera-frame depth " + std::to_string(pc.z()) + " is not positive");
  }
  return Projection{intr.fx * pc.x() / pc.z() + intr.cx, intr.fy * pc.y() / pc.z() + intr.cy, pc.z()};
}

Ray unproject(const CameraIntrinsics& intr, const CameraPose& pose, double u, double v) {
  // Point on the z = 1 plane; the near and far points are scalings of it.
  const Vec3 unit_depth((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
  const Mat3 rot = pose.rotation();
  const Vec3 near_point = rot * (intr.z_near * unit_depth) + pose.position;
  return Ray{near_point, (rot * unit_depth).normalized()};
}

LineFit nearest_point_to_lines(std::span<const Ray> rays) {
  if (rays.size() < 2) {
    throw Error(ErrorCode::TooFewRays, "need at least 2 rays, got " + std::to_string(rays.size()));
  }
  Mat3 normal = Mat3::Zero();
  Vec3 rhs = Vec3::Zero();
  for (const Ray& ray : rays) {
    const Mat3 perp = Mat3::Identity() - ray.direction * ray.direction.transpose();
    normal += perp;
    rhs += perp * ray.origin;
  }

  const Eigen::SelfAdjointEigenSolver<Mat3> eig(normal);
  const Vec3& values = eig.eigenvalues();  // ascending
  if (!(values(0) >= kDegenerateEigenRatio * values(2))) {
    throw Error(ErrorCode::DegenerateConfiguration, "rays are (nearly) parallel");
  }
  const Mat3& vectors = eig.eigenvectors();
  const Vec3 point = vectors * (vectors.transpose() * rhs).cwiseQuotient(values);

  double sum_sq = 0.0;
  for (const Ray& ray : rays) {
    const double d = ray.distance_to(point);
    sum_sq += d * d;
  }
  return LineFit{point, std::sqrt(sum_sq / static_cast<double>(rays.size()))};
}

}  // namespace hforge
