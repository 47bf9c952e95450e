#include "oracles.hpp"

#include <utility>

namespace hforge::oracle {

bool covers(raster::ScreenVertex a, raster::ScreenVertex b, raster::ScreenVertex c, double px, double py) {
  const double area = raster::edge_function(a, b, c.x, c.y);
  if (area == 0.0) return false;
  if (area < 0.0) std::swap(b, c);
  const raster::ScreenVertex v[3] = {a, b, c};
  for (int i = 0; i < 3; ++i) {
    const raster::ScreenVertex& p = v[(i + 1) % 3];
    const raster::ScreenVertex& q = v[(i + 2) % 3];
    const double e = raster::edge_function(p, q, px, py);
    if (e > 0.0) continue;
    if (e < 0.0) return false;
    const bool top = q.y == p.y && q.x > p.x;
    const bool left = q.y < p.y;
    if (!(top || left)) return false;
  }
  return true;
}

double plane_depth(const CameraIntrinsics& cam, const Vec3& a, const Vec3& b, const Vec3& c, int x, int y) {
  const Vec3 d((x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0);
  const Vec3 n = (b - a).cross(c - a);
  return n.dot(a) / n.dot(d);
}

double line_objective(std::span<const Ray> rays, const Vec3& x) {
  double s = 0.0;
  for (const Ray& r : rays) s += (x - r.origin).cross(r.direction).squaredNorm() / r.direction.squaredNorm();
  return s;
}

Vec3 grid_minimize(std::span<const Ray> rays, Vec3 center, double half_width) {
  constexpr int kSteps = 20;
  while (half_width > 1e-6) {
    const double step = 2.0 * half_width / kSteps;
    Vec3 best = center;
    double best_f = line_objective(rays, center);
    for (int i = 0; i <= kSteps; ++i) {
      for (int j = 0; j <= kSteps; ++j) {
        for (int k = 0; k <= kSteps; ++k) {
          const Vec3 x = center + Vec3(-half_width + i * step, -half_width + j * step, -half_width + k * step);
          const double f = line_objective(rays, x);
          if (f < best_f) {
            best_f = f;
            best = x;
          }
        }
      }
    }
    center = best;
    half_width *= 0.5;
  }
  return center;
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-3);
  return v.normalized();
}

}  // namespace hforge::oracle
