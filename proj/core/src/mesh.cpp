#include "hforge/mesh.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "hforge/error.hpp"

namespace hforge {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

double parse_double(std::string_view tok, const std::filesystem::path& path, std::size_t line) {
  double value = 0.0;
  const char* first = tok.data();
  if (!tok.empty() && tok.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw Error(ErrorCode::Parse, where(path, line) + ": bad number '" + std::string(tok) + "'");
  }
  return value;
}

long parse_index(std::string_view tok, const std::filesystem::path& path, std::size_t line) {
  long value = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || value == 0) {
    throw Error(ErrorCode::Parse, where(path, line) + ": bad index '" + std::string(tok) + "'");
  }
  return value;
}

// Resolves a 1-based (or negative, relative) OBJ index; -1 when absent.
long resolve(long raw, std::size_t count, const std::filesystem::path& path, std::size_t line,
             const char* what) {
  const long idx = raw > 0 ? raw - 1 : static_cast<long>(count) + raw;
  if (idx < 0 || idx >= static_cast<long>(count)) {
    throw Error(ErrorCode::Validation, where(path, line) + ": " + what + " index " + std::to_string(raw) +
                                           " out of range (have " + std::to_string(count) + ")");
  }
  return idx;
}

struct Corner {
  long v = -1;
  long vt = -1;
  long vn = -1;
  auto operator<=>(const Corner&) const = default;
};

// map_Kd of every material in an MTL file.
std::map<std::string, std::filesystem::path> read_mtl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open material file " + path.string());
  std::map<std::string, std::filesystem::path> textures;
  std::string current;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "newmtl" && tok.size() >= 2) {
      current = std::string(tok[1]);
    } else if (tok[0] == "map_Kd" && tok.size() >= 2) {
      if (current.empty()) throw Error(ErrorCode::Parse, where(path, line_no) + ": map_Kd before newmtl");
      // Options such as -s/-o are not supported; the file name is the last token.
      textures[current] = path.parent_path() / std::string(tok.back());
    }
  }
  return textures;
}

void check_finite(const Vec3& p, const std::filesystem::path& path, std::size_t line) {
  if (!p.allFinite()) throw Error(ErrorCode::Validation, where(path, line) + ": non-finite vertex");
}

}  // namespace

void Mesh::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::Validation, what); };
  if (vertices.empty()) fail("mesh has no vertices");
  if (triangles.empty()) fail("mesh has no triangles");
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (!vertices[i].allFinite()) fail("vertex " + std::to_string(i) + " is not finite");
  }
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (auto idx : triangles[t]) {
      if (idx >= vertices.size()) {
        fail("triangle " + std::to_string(t) + " references vertex " + std::to_string(idx) + " of " +
             std::to_string(vertices.size()));
      }
    }
  }
  if (has_colors() == has_texture()) fail("mesh needs exactly one of vertex colors or a texture");
  if (has_colors()) {
    if (colors.size() != vertices.size()) fail("color count differs from vertex count");
    for (const Vec3& c : colors) {
      if (!((c.array() >= 0.0).all() && (c.array() <= 1.0).all())) fail("vertex color outside [0, 1]");
    }
  }
  if (has_texture()) {
    if (uvs.size() != vertices.size()) fail("uv count differs from vertex count");
    if (texture->width <= 0 || texture->height <= 0) fail("texture image is empty");
  }
  if (!normals.empty() && normals.size() != vertices.size()) fail("normal count differs from vertex count");
}

UpAxis parse_up_axis(const std::string& text) {
  if (text == "+y" || text == "y") return UpAxis::PosY;
  if (text == "-y") return UpAxis::NegY;
  if (text == "+z" || text == "z") return UpAxis::PosZ;
  if (text == "-z") return UpAxis::NegZ;
  throw Error(ErrorCode::InvalidArgument, "unknown up axis '" + text + "' (expected +y, -y, +z or -z)");
}

Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());

  std::vector<Vec3> positions;
  std::vector<Vec3> colors;
  std::vector<Vec2> texcoords;
  std::vector<Vec3> normals;
  std::vector<std::array<Corner, 3>> faces;
  std::vector<std::size_t> face_lines;
  std::map<std::string, std::filesystem::path> materials;
  std::filesystem::path texture_path;
  std::size_t colored_lines = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    const std::string_view kind = tok[0];
    if (kind == "v") {
      if (tok.size() != 4 && tok.size() != 5 && tok.size() != 7) {
        throw Error(ErrorCode::Parse, where(path, line_no) + ": 'v' expects 3, 4 or 6 numbers");
      }
      Vec3 p(parse_double(tok[1], path, line_no), parse_double(tok[2], path, line_no),
             parse_double(tok[3], path, line_no));
      check_finite(p, path, line_no);
      positions.push_back(p);
      if (tok.size() == 7) {
        colors.emplace_back(parse_double(tok[4], path, line_no), parse_double(tok[5], path, line_no),
                            parse_double(tok[6], path, line_no));
        ++colored_lines;
      } else {
        colors.emplace_back(Vec3::Zero());
      }
    } else if (kind == "vt") {
      if (tok.size() < 3) throw Error(ErrorCode::Parse, where(path, line_no) + ": 'vt' expects 2 numbers");
      texcoords.emplace_back(parse_double(tok[1], path, line_no), parse_double(tok[2], path, line_no));
    } else if (kind == "vn") {
      if (tok.size() != 4) throw Error(ErrorCode::Parse, where(path, line_no) + ": 'vn' expects 3 numbers");
      normals.emplace_back(parse_double(tok[1], path, line_no), parse_double(tok[2], path, line_no),
                           parse_double(tok[3], path, line_no));
    } else if (kind == "f") {
      if (tok.size() < 4) throw Error(ErrorCode::Parse, where(path, line_no) + ": face needs >= 3 corners");
      std::vector<Corner> corners;
      for (std::size_t k = 1; k < tok.size(); ++k) {
        const std::string_view t = tok[k];
        Corner c;
        const auto s1 = t.find('/');
        c.v = resolve(parse_index(t.substr(0, s1), path, line_no), positions.size(), path, line_no, "vertex");
        if (s1 != std::string_view::npos) {
          const auto rest = t.substr(s1 + 1);
          const auto s2 = rest.find('/');
          const auto vt_tok = rest.substr(0, s2);
          if (!vt_tok.empty()) {
            c.vt = resolve(parse_index(vt_tok, path, line_no), texcoords.size(), path, line_no, "texcoord");
          }
          if (s2 != std::string_view::npos) {
            c.vn = resolve(parse_index(rest.substr(s2 + 1), path, line_no), normals.size(), path, line_no,
                           "normal");
          }
        }
        corners.push_back(c);
      }
      for (std::size_t k = 1; k + 1 < corners.size(); ++k) {
        faces.push_back({corners[0], corners[k], corners[k + 1]});
        face_lines.push_back(line_no);
      }
    } else if (kind == "mtllib" && tok.size() >= 2) {
      auto more = read_mtl(path.parent_path() / std::string(tok[1]));
      materials.merge(more);
    } else if (kind == "usemtl" && tok.size() >= 2) {
      const auto it = materials.find(std::string(tok[1]));
      if (it != materials.end()) {
        if (!texture_path.empty() && texture_path != it->second) {
          throw Error(ErrorCode::Validation, where(path, line_no) + ": only one texture image is supported");
        }
        texture_path = it->second;
      }
    }
  }

  if (positions.empty()) throw Error(ErrorCode::Validation, path.string() + ": no vertices");
  if (faces.empty()) throw Error(ErrorCode::Validation, path.string() + ": no faces");
  if (colored_lines != 0 && colored_lines != positions.size()) {
    throw Error(ErrorCode::Validation, path.string() + ": vertex colors present on only some 'v' lines");
  }
  const bool use_colors = colored_lines != 0;
  const bool use_texture = !use_colors && !texture_path.empty();
  if (!use_colors && !use_texture) {
    throw Error(ErrorCode::Validation,
                path.string() + ": missing attributes (neither vertex colors nor a textured material)");
  }
  bool use_normals = !normals.empty();

  // Each file vertex keeps its index for the first (vt, vn) combination it is
  // used with; further combinations split it into appended vertices.
  Mesh mesh;
  mesh.vertices = positions;
  if (use_colors) mesh.colors = colors;
  std::vector<Corner> assigned(positions.size());
  std::map<Corner, std::uint32_t> splits;
  auto index_for = [&](const Corner& c, std::size_t line_of_face) -> std::uint32_t {
    Corner key{c.v, use_texture ? c.vt : -1, use_normals ? c.vn : -1};
    if (use_texture && key.vt < 0) {
      throw Error(ErrorCode::Validation, where(path, line_of_face) + ": textured face corner without texcoord");
    }
    Corner& slot = assigned[key.v];
    if (slot.v < 0) {
      slot = key;
      return static_cast<std::uint32_t>(key.v);
    }
    if (slot == key) return static_cast<std::uint32_t>(key.v);
    const auto it = splits.find(key);
    if (it != splits.end()) return it->second;
    const auto idx = static_cast<std::uint32_t>(mesh.vertices.size());
    mesh.vertices.push_back(positions[key.v]);
    if (use_colors) mesh.colors.push_back(colors[key.v]);
    assigned.push_back(key);
    splits.emplace(key, idx);
    return idx;
  };
  mesh.triangles.reserve(faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    Triangle tri{};
    for (int k = 0; k < 3; ++k) tri[k] = index_for(faces[f][k], face_lines[f]);
    mesh.triangles.push_back(tri);
  }
  if (use_normals) {
    for (const Corner& c : assigned) use_normals = use_normals && c.vn >= 0;
  }
  if (use_texture) {
    mesh.uvs.resize(mesh.vertices.size(), Vec2::Zero());
    for (std::size_t i = 0; i < assigned.size(); ++i) {
      if (assigned[i].vt >= 0) mesh.uvs[i] = texcoords[assigned[i].vt];
    }
    mesh.texture = std::make_shared<const RgbImage>(read_png_rgb(texture_path));
  }
  if (use_normals) {
    mesh.normals.resize(mesh.vertices.size());
    for (std::size_t i = 0; i < assigned.size(); ++i) mesh.normals[i] = normals[assigned[i].vn];
  }
  mesh.validate();
  return mesh;
}

void write_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  mesh.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  char buf[160];
  const std::string stem = path.stem().string();
  if (mesh.has_texture()) {
    const std::string mtl_name = stem + ".mtl";
    const std::string tex_name = stem + "_texture.png";
    std::ofstream mtl(path.parent_path() / mtl_name);
    if (!mtl) throw Error(ErrorCode::Io, "cannot write " + (path.parent_path() / mtl_name).string());
    mtl << "newmtl skin\nmap_Kd " << tex_name << "\n";
    write_png(path.parent_path() / tex_name, *mesh.texture);
    out << "mtllib " << mtl_name << "\n";
  }
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& p = mesh.vertices[i];
    if (mesh.has_colors()) {
      const Vec3& c = mesh.colors[i];
      std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g %.17g %.17g %.17g\n", p.x(), p.y(), p.z(), c.x(),
                    c.y(), c.z());
    } else {
      std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    }
    out << buf;
  }
  for (const Vec2& uv : mesh.uvs) {
    std::snprintf(buf, sizeof buf, "vt %.17g %.17g\n", uv.x(), uv.y());
    out << buf;
  }
  for (const Vec3& n : mesh.normals) {
    std::snprintf(buf, sizeof buf, "vn %.17g %.17g %.17g\n", n.x(), n.y(), n.z());
    out << buf;
  }
  if (mesh.has_texture()) out << "usemtl skin\n";
  const bool uv = mesh.has_texture();
  const bool nrm = !mesh.normals.empty();
  for (const Triangle& t : mesh.triangles) {
    out << 'f';
    for (auto idx : t) {
      const auto one = idx + 1;
      out << ' ' << one;
      if (uv && nrm) {
        out << '/' << one << '/' << one;
      } else if (uv) {
        out << '/' << one;
      } else if (nrm) {
        out << "//" << one;
      }
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

Aabb compute_bounds(const Mesh& mesh) {
  if (mesh.vertices.empty()) return Aabb{};
  Aabb box{mesh.vertices.front(), mesh.vertices.front()};
  for (const Vec3& v : mesh.vertices) {
    box.min = box.min.cwiseMin(v);
    box.max = box.max.cwiseMax(v);
  }
  return box;
}

MeshReport inspect_mesh(const Mesh& mesh) {
  MeshReport report;
  report.vertex_count = mesh.vertices.size();
  report.triangle_count = mesh.triangles.size();
  report.appearance = mesh.has_colors() ? "vertex-colors" : (mesh.has_texture() ? "texture" : "none");
  std::unordered_map<std::uint64_t, int> edge_use;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Triangle& tri = mesh.triangles[t];
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    if ((b - a).cross(c - a).squaredNorm() == 0.0) report.degenerate_triangles.push_back(t);
    for (int k = 0; k < 3; ++k) {
      std::uint64_t i = tri[k];
      std::uint64_t j = tri[(k + 1) % 3];
      if (i > j) std::swap(i, j);
      ++edge_use[(i << 32) | j];
    }
  }
  for (const auto& [edge, count] : edge_use) {
    if (count > 2) ++report.non_manifold_edges;
  }
  return report;
}

std::string MeshReport::to_text() const {
  std::ostringstream out;
  out << "vertices: " << vertex_count << "\n"
      << "triangles: " << triangle_count << "\n"
      << "appearance: " << appearance << "\n"
      << "degenerate_triangles: " << degenerate_triangles.size() << "\n"
      << "non_manifold_edges: " << non_manifold_edges << "\n";
  if (!degenerate_triangles.empty()) {
    out << "degenerate_triangle_indices:";
    const std::size_t shown = std::min<std::size_t>(degenerate_triangles.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) out << ' ' << degenerate_triangles[i];
    if (shown < degenerate_triangles.size()) out << " ...";
    out << "\n";
  }
  return out.str();
}

Mesh reorient_up(const Mesh& mesh, UpAxis up) {
  Mat3 rot;
  switch (up) {
    case UpAxis::NegY: rot = Mat3::Identity(); break;
    case UpAxis::PosY: rot << 1, 0, 0, 0, -1, 0, 0, 0, -1; break;
    case UpAxis::PosZ: rot << 1, 0, 0, 0, 0, -1, 0, 1, 0; break;
    case UpAxis::NegZ: rot << 1, 0, 0, 0, 0, 1, 0, -1, 0; break;
  }
  Mesh out = mesh;
  for (Vec3& v : out.vertices) v = rot * v;
  for (Vec3& n : out.normals) n = rot * n;
  return out;
}

Mesh normalize_mesh(const Mesh& mesh, double target_height) {
  if (!(target_height > 0.0) || !std::isfinite(target_height)) {
    throw Error(ErrorCode::InvalidArgument, "target_height must be positive");
  }
  const Aabb box = compute_bounds(mesh);
  const double extent = box.max.y() - box.min.y();
  if (!(extent >= 1e-12)) {
    throw Error(ErrorCode::DegenerateMesh, "vertical extent " + std::to_string(extent) + " is below 1e-12");
  }
  const double scale = target_height / extent;
  const Vec3 anchor(0.5 * (box.min.x() + box.max.x()), box.max.y(), 0.5 * (box.min.z() + box.max.z()));
  Mesh out = mesh;
  for (Vec3& v : out.vertices) v = (v - anchor) * scale;
  return out;
}

}  // namespace hforge
