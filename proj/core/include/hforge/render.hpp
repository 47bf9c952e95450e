#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <vector>

#include "hforge/geometry.hpp"
#include "hforge/image.hpp"
#include "hforge/mesh.hpp"

namespace hforge {

inline constexpr double kNoDepth = std::numeric_limits<double>::infinity();

/// RGBA color plus per-pixel camera depth; uncovered pixels have alpha 0 and
/// depth kNoDepth.
struct Framebuffer {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgba;
  std::vector<double> depth;

  Framebuffer() = default;
  Framebuffer(int w, int h)
      : width(w),
        height(h),
        rgba(static_cast<std::size_t>(w) * h * 4, 0),
        depth(static_cast<std::size_t>(w) * h, kNoDepth) {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  std::uint8_t alpha(int x, int y) const { return rgba[index(x, y) * 4 + 3]; }
  bool covered(int x, int y) const { return alpha(x, y) > 0; }

  /// Flattens onto a solid background color.
  RgbImage to_rgb(const std::array<std::uint8_t, 3>& background = {0, 0, 0}) const;
  RgbaImage to_rgba() const;

  bool operator==(const Framebuffer&) const = default;
};

enum class Shading { UnlitAlbedo, FlatLit };

struct RenderConfig {
  /// Solid color used when the framebuffer is flattened for a detector;
  /// transparent when absent.
  std::optional<std::array<std::uint8_t, 3>> background;
  Shading shading = Shading::UnlitAlbedo;
  Vec3 light_direction = Vec3(0.3, -1.0, 0.5).normalized();
  /// Horizontal pixel bands rendered concurrently; output does not depend on it.
  int bands = 1;
};

/// Z-buffered perspective-correct rasterization with pixel-center sampling
/// and a top-left fill rule. Triangles are clipped against the near plane.
Framebuffer render_mesh(const Mesh& mesh, const CameraIntrinsics& intr, const CameraPose& pose,
                        const RenderConfig& cfg = {});

/// Rasterizer building blocks, exposed for instrumentation and tests.
namespace raster {

struct ScreenVertex {
  double x = 0.0;
  double y = 0.0;
};

/// Edge function of the directed edge a->b at p. Evaluated from the
/// lexicographically smaller endpoint so that the reverse edge yields the
/// exact negation, which keeps shared edges watertight.
double edge_function(const ScreenVertex& a, const ScreenVertex& b, double px, double py);

/// Whether a directed edge of a positively oriented triangle owns the
/// samples lying exactly on it.
bool is_top_left(const ScreenVertex& a, const ScreenVertex& b);

/// Visits every pixel center covered by the screen triangle, passing the
/// perspective-free barycentric weights (w0, w1, w2) of vertices (a, b, c).
template <typename Visit>
void for_each_covered_pixel(ScreenVertex a, ScreenVertex b, ScreenVertex c, int width, int row_begin,
                            int row_end, Visit&& visit);

}  // namespace raster

/// Source-over blend of `src` onto an RGB image; pixels falling outside
/// `dst` are dropped.
void composite_over(RgbImage& dst, const Framebuffer& src, int offset_x, int offset_y);

/// Source-over blend onto a framebuffer; covered source depth replaces the
/// destination depth where it is nearer.
void composite_over(Framebuffer& dst, const Framebuffer& src, int offset_x, int offset_y);

/// Blends one 8-bit channel: round(a*s + (1-a)*d) with a = alpha/255.
inline std::uint8_t blend_channel(std::uint8_t src, std::uint8_t dst, std::uint8_t alpha) {
  const unsigned value = alpha * unsigned{src} + (255u - alpha) * unsigned{dst};
  return static_cast<std::uint8_t>((value + 127u) / 255u);
}

/// Debug dump: 16-byte header ("HFDEPTH\0", width, height as little-endian
/// uint32) followed by row-major float32 depths.
void write_depth(const std::filesystem::path& path, const Framebuffer& fb);

}  // namespace hforge

#include "hforge/detail/raster_impl.hpp"
