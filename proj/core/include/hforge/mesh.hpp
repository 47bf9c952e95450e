#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "hforge/geometry.hpp"
#include "hforge/image.hpp"

namespace hforge {

using Triangle = std::array<std::uint32_t, 3>;

/// Rigid textured triangle mesh. Appearance is either per-vertex RGB colors
/// in [0, 1] or per-vertex UVs plus a texture image, never both.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<Vec3> colors;
  std::vector<Vec2> uvs;
  std::shared_ptr<const RgbImage> texture;
  std::vector<Vec3> normals;

  bool empty() const { return vertices.empty() || triangles.empty(); }
  bool has_colors() const { return !colors.empty(); }
  bool has_texture() const { return texture != nullptr; }

  /// Throws Error(Validation) describing the first broken invariant.
  void validate() const;
};

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

/// Which file axis points up. Meshes are converted to the canonical frame
/// where -Y is up (so +Y points toward the ground).
enum class UpAxis { PosY, NegY, PosZ, NegZ };

UpAxis parse_up_axis(const std::string& text);

struct MeshReport {
  std::size_t vertex_count = 0;
  std::size_t triangle_count = 0;
  std::string appearance;  // "vertex-colors" or "texture"
  std::vector<std::size_t> degenerate_triangles;
  std::size_t non_manifold_edges = 0;

  /// `key: value` lines, one per field.
  std::string to_text() const;
};

/// Wavefront OBJ with optional `v x y z r g b` colors or vt + MTL map_Kd PNG.
/// Throws Error(Io), Error(Parse) or Error(Validation); messages carry the
/// offending line number.
Mesh load_mesh(const std::filesystem::path& path);

/// Writes OBJ (plus `<stem>.mtl` and `<stem>_texture.png` for textured
/// meshes) with round-trip exact coordinates.
void write_mesh(const Mesh& mesh, const std::filesystem::path& path);

Aabb compute_bounds(const Mesh& mesh);

MeshReport inspect_mesh(const Mesh& mesh);

/// Rotates the mesh so that `up` becomes canonical up (-Y).
Mesh reorient_up(const Mesh& mesh, UpAxis up);

/// Uniformly scales to `target_height` along Y, puts the lowest point
/// (largest Y) at Y = 0 and centers the X/Z bounds on the origin.
/// Throws Error(InvalidArgument) for target_height <= 0 and
/// Error(DegenerateMesh) for a vertical extent below 1e-12.
Mesh normalize_mesh(const Mesh& mesh, double target_height);

}  // namespace hforge
