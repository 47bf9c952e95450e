#include "hforge/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "hforge/error.hpp"

namespace hforge {
namespace {

struct ClipVertex {
  Vec3 cam;   // camera-frame position
  Vec3 attr;  // color, or (u, v, 0)
};

struct ScreenTriangle {
  raster::ScreenVertex screen[3];
  double inv_z[3];
  Vec3 attr_over_z[3];
  double shade = 1.0;
};

// Sutherland-Hodgman against z >= z_near.
std::vector<ClipVertex> clip_near(const std::array<ClipVertex, 3>& tri, double z_near) {
  std::vector<ClipVertex> out;
  for (int i = 0; i < 3; ++i) {
    const ClipVertex& cur = tri[i];
    const ClipVertex& nxt = tri[(i + 1) % 3];
    const bool cur_in = cur.cam.z() >= z_near;
    const bool nxt_in = nxt.cam.z() >= z_near;
    if (cur_in) out.push_back(cur);
    if (cur_in != nxt_in) {
      const double t = (z_near - cur.cam.z()) / (nxt.cam.z() - cur.cam.z());
      ClipVertex mid{cur.cam + t * (nxt.cam - cur.cam), cur.attr + t * (nxt.attr - cur.attr)};
      mid.cam.z() = z_near;
      out.push_back(mid);
    }
  }
  return out;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

RgbImage Framebuffer::to_rgb(const std::array<std::uint8_t, 3>& background) const {
  RgbImage out(width, height);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const std::uint8_t* s = &rgba[i * 4];
    std::uint8_t* d = &out.data[i * 3];
    for (int k = 0; k < 3; ++k) d[k] = blend_channel(s[k], background[k], s[3]);
  }
  return out;
}

RgbaImage Framebuffer::to_rgba() const {
  RgbaImage out(width, height);
  out.data = rgba;
  return out;
}

Framebuffer render_mesh(const Mesh& mesh, const CameraIntrinsics& intr, const CameraPose& pose,
                        const RenderConfig& cfg) {
  intr.validate();
  Framebuffer fb(intr.width, intr.height);
  if (mesh.empty()) return fb;
  mesh.validate();

  if (compute_bounds(mesh).contains(pose.position)) {
    spdlog::warn("render: camera at ({}, {}, {}) lies inside the mesh bounds", pose.position.x(),
                 pose.position.y(), pose.position.z());
  }

  const Mat3 rot_t = pose.rotation().transpose();
  std::vector<Vec3> cam(mesh.vertices.size());
  for (std::size_t i = 0; i < cam.size(); ++i) cam[i] = rot_t * (mesh.vertices[i] - pose.position);

  const bool textured = mesh.has_texture();
  auto attribute = [&](std::uint32_t i) -> Vec3 {
    if (textured) return Vec3(mesh.uvs[i].x(), mesh.uvs[i].y(), 0.0);
    return mesh.colors[i];
  };
  const Vec3 light = cfg.light_direction.normalized();

  std::vector<ScreenTriangle> screen;
  screen.reserve(mesh.triangles.size());
  for (const Triangle& tri : mesh.triangles) {
    const std::array<ClipVertex, 3> verts{ClipVertex{cam[tri[0]], attribute(tri[0])},
                                          ClipVertex{cam[tri[1]], attribute(tri[1])},
                                          ClipVertex{cam[tri[2]], attribute(tri[2])}};
    double shade = 1.0;
    if (cfg.shading == Shading::FlatLit) {
      const Vec3& a = mesh.vertices[tri[0]];
      const Vec3 n = (mesh.vertices[tri[1]] - a).cross(mesh.vertices[tri[2]] - a);
      const double len = n.norm();
      shade = len > 0.0 ? 0.25 + 0.75 * std::abs(n.dot(light) / len) : 0.25;
    }
    std::vector<ClipVertex> poly;
    if (verts[0].cam.z() >= intr.z_near && verts[1].cam.z() >= intr.z_near && verts[2].cam.z() >= intr.z_near) {
      poly.assign(verts.begin(), verts.end());
    } else {
      poly = clip_near(verts, intr.z_near);
    }
    for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
      ScreenTriangle st;
      const ClipVertex* corners[3] = {&poly[0], &poly[k], &poly[k + 1]};
      for (int j = 0; j < 3; ++j) {
        const Vec3& p = corners[j]->cam;
        st.screen[j] = {intr.fx * p.x() / p.z() + intr.cx, intr.fy * p.y() / p.z() + intr.cy};
        st.inv_z[j] = 1.0 / p.z();
        st.attr_over_z[j] = corners[j]->attr * st.inv_z[j];
      }
      st.shade = shade;
      screen.push_back(st);
    }
  }

  const RgbImage* tex = mesh.texture.get();
  auto shade_pixel = [&](const ScreenTriangle& st, double w0, double w1, double w2, double inv_z,
                         std::uint8_t* out) {
    const Vec3 attr = (w0 * st.attr_over_z[0] + w1 * st.attr_over_z[1] + w2 * st.attr_over_z[2]) / inv_z;
    Vec3 color;
    if (tex) {
      const int tx = std::clamp(static_cast<int>(std::floor(attr.x() * tex->width)), 0, tex->width - 1);
      const int ty = std::clamp(static_cast<int>(std::floor((1.0 - attr.y()) * tex->height)), 0, tex->height - 1);
      const std::uint8_t* t = tex->at(tx, ty);
      color = Vec3(t[0], t[1], t[2]) / 255.0;
    } else {
      color = attr;
    }
    color *= st.shade;
    out[0] = to_byte(color.x());
    out[1] = to_byte(color.y());
    out[2] = to_byte(color.z());
    out[3] = 255;
  };

  auto render_rows = [&](int row_begin, int row_end) {
    for (const ScreenTriangle& st : screen) {
      raster::for_each_covered_pixel(
          st.screen[0], st.screen[1], st.screen[2], fb.width, row_begin, row_end,
          [&](int x, int y, double w0, double w1, double w2) {
            const double inv_z = w0 * st.inv_z[0] + w1 * st.inv_z[1] + w2 * st.inv_z[2];
            if (!(inv_z > 0.0)) return;
            const double z = 1.0 / inv_z;
            const std::size_t idx = fb.index(x, y);
            if (!(z < fb.depth[idx])) return;
            fb.depth[idx] = z;
            shade_pixel(st, w0, w1, w2, inv_z, &fb.rgba[idx * 4]);
          });
    }
  };

  const int bands = std::clamp(cfg.bands, 1, fb.height);
  if (bands == 1) {
    render_rows(0, fb.height);
  } else {
    std::vector<std::thread> workers;
    for (int b = 0; b < bands; ++b) {
      const int begin = fb.height * b / bands;
      const int end = fb.height * (b + 1) / bands;
      workers.emplace_back(render_rows, begin, end);
    }
    for (auto& w : workers) w.join();
  }
  return fb;
}

void composite_over(RgbImage& dst, const Framebuffer& src, int offset_x, int offset_y) {
  for (int sy = 0; sy < src.height; ++sy) {
    const int dy = sy + offset_y;
    if (dy < 0 || dy >= dst.height) continue;
    for (int sx = 0; sx < src.width; ++sx) {
      const int dx = sx + offset_x;
      if (dx < 0 || dx >= dst.width) continue;
      const std::uint8_t* s = &src.rgba[src.index(sx, sy) * 4];
      if (s[3] == 0) continue;
      std::uint8_t* d = dst.at(dx, dy);
      for (int k = 0; k < 3; ++k) d[k] = blend_channel(s[k], d[k], s[3]);
    }
  }
}

void composite_over(Framebuffer& dst, const Framebuffer& src, int offset_x, int offset_y) {
  for (int sy = 0; sy < src.height; ++sy) {
    const int dy = sy + offset_y;
    if (dy < 0 || dy >= dst.height) continue;
    for (int sx = 0; sx < src.width; ++sx) {
      const int dx = sx + offset_x;
      if (dx < 0 || dx >= dst.width) continue;
      const std::size_t si = src.index(sx, sy);
      const std::uint8_t* s = &src.rgba[si * 4];
      if (s[3] == 0) continue;
      const std::size_t di = dst.index(dx, dy);
      std::uint8_t* d = &dst.rgba[di * 4];
      for (int k = 0; k < 3; ++k) d[k] = blend_channel(s[k], d[k], s[3]);
      d[3] = static_cast<std::uint8_t>(s[3] + (255u - s[3]) * d[3] / 255u);
      dst.depth[di] = std::min(dst.depth[di], src.depth[si]);
    }
  }
}

void write_depth(const std::filesystem::path& path, const Framebuffer& fb) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  char header[16] = {'H', 'F', 'D', 'E', 'P', 'T', 'H', '\0'};
  const auto w = static_cast<std::uint32_t>(fb.width);
  const auto h = static_cast<std::uint32_t>(fb.height);
  for (int i = 0; i < 4; ++i) {
    header[8 + i] = static_cast<char>((w >> (8 * i)) & 0xff);
    header[12 + i] = static_cast<char>((h >> (8 * i)) & 0xff);
  }
  out.write(header, sizeof header);
  std::vector<float> values(fb.depth.begin(), fb.depth.end());
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace hforge
