#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "hforge/error.hpp"
#include "hforge/mesh.hpp"
#include "synthetic.hpp"

using namespace hforge;
namespace fs = std::filesystem;

namespace {

fs::path write_text(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvariantViolation;
}

void expect_identical(const Mesh& a, const Mesh& b) {
  ASSERT_EQ(a.vertices.size(), b.vertices.size());
  for (std::size_t i = 0; i < a.vertices.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(std::bit_cast<std::uint64_t>(a.vertices[i][k]), std::bit_cast<std::uint64_t>(b.vertices[i][k]));
    }
  }
  EXPECT_EQ(a.triangles, b.triangles);
  EXPECT_EQ(a.colors, b.colors);
  EXPECT_EQ(a.uvs, b.uvs);
  EXPECT_EQ(a.normals, b.normals);
  ASSERT_EQ(a.has_texture(), b.has_texture());
  if (a.has_texture()) EXPECT_EQ(*a.texture, *b.texture);
}

Mesh random_mesh(std::mt19937_64& rng, int n_vertices) {
  std::uniform_real_distribution<double> pos(-3.0, 3.0), col(0.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> idx(0, n_vertices - 1);
  Mesh m;
  for (int i = 0; i < n_vertices; ++i) {
    m.vertices.emplace_back(pos(rng), pos(rng), pos(rng));
    m.colors.emplace_back(col(rng), col(rng), col(rng));
  }
  for (int t = 0; t < n_vertices; ++t) m.triangles.push_back({idx(rng), idx(rng), idx(rng)});
  return m;
}

}  // namespace

class MeshFiles : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = synth::fresh_dir(::testing::UnitTest::GetInstance()->current_test_info()->name()); }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(MeshFiles, MinimalColoredTriangle) {
  const fs::path p = write_text(dir_ / "tri.obj",
                                "# one triangle\n"
                                "v 0 0 0 1 0 0\n"
                                "v 1 0 0 0 1 0\n"
                                "v 0 1 0 0 0 1\n"
                                "f 1 2 3\n");
  const Mesh m = load_mesh(p);
  EXPECT_EQ(m.vertices.size(), 3u);
  EXPECT_EQ(m.triangles.size(), 1u);
  EXPECT_EQ(m.triangles[0], (Triangle{0, 1, 2}));
  EXPECT_EQ(m.colors[1], Vec3(0, 1, 0));
  EXPECT_FALSE(m.has_texture());
}

TEST_F(MeshFiles, OutOfRangeIndexIsValidationError) {
  const fs::path p = write_text(dir_ / "bad.obj", "v 0 0 0 1 1 1\nv 1 0 0 1 1 1\nv 0 1 0 1 1 1\nf 1 2 99\n");
  EXPECT_EQ(code_of([&] { load_mesh(p); }), ErrorCode::Validation);
  try {
    load_mesh(p);
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(":4"), std::string::npos) << e.what();
  }
}

TEST_F(MeshFiles, MalformedNumberIsParseError) {
  const fs::path p = write_text(dir_ / "bad.obj", "v 0 0 zero 1 1 1\n");
  EXPECT_EQ(code_of([&] { load_mesh(p); }), ErrorCode::Parse);
}

TEST_F(MeshFiles, NanVertexIsValidationError) {
  const fs::path p = write_text(dir_ / "nan.obj", "v nan 0 0 1 1 1\nv 1 0 0 1 1 1\nv 0 1 0 1 1 1\nf 1 2 3\n");
  EXPECT_EQ(code_of([&] { load_mesh(p); }), ErrorCode::Validation);
}

TEST_F(MeshFiles, MissingAppearanceIsValidationError) {
  const fs::path p = write_text(dir_ / "plain.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  EXPECT_EQ(code_of([&] { load_mesh(p); }), ErrorCode::Validation);
}

TEST_F(MeshFiles, MissingFileIsIoError) {
  EXPECT_EQ(code_of([&] { load_mesh(dir_ / "nope.obj"); }), ErrorCode::Io);
}

TEST_F(MeshFiles, QuadsAndNegativeIndices) {
  const fs::path p = write_text(dir_ / "quad.obj",
                                "v 0 0 0 1 1 1\nv 1 0 0 1 1 1\nv 1 1 0 1 1 1\nv 0 1 0 1 1 1\n"
                                "f -4 -3 -2 -1\n");
  const Mesh m = load_mesh(p);
  ASSERT_EQ(m.triangles.size(), 2u);
  EXPECT_EQ(m.triangles[0], (Triangle{0, 1, 2}));
  EXPECT_EQ(m.triangles[1], (Triangle{0, 2, 3}));
}

TEST_F(MeshFiles, ColoredRoundTripIsBitExact) {
  std::mt19937_64 rng(1);
  const Mesh m = random_mesh(rng, 200);
  write_mesh(m, dir_ / "rt.obj");
  const Mesh back = load_mesh(dir_ / "rt.obj");
  expect_identical(m, back);
  write_mesh(back, dir_ / "rt2.obj");
  expect_identical(back, load_mesh(dir_ / "rt2.obj"));
}

TEST_F(MeshFiles, TexturedRoundTripIsBitExact) {
  auto tex = std::make_shared<RgbImage>(synth::noise_image(16, 8, 3));
  Mesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0.5)};
  m.uvs = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1), Vec2(0.3, 0.7)};
  m.normals = {Vec3::UnitZ(), Vec3::UnitZ(), Vec3::UnitZ(), Vec3(0, 0.6, 0.8)};
  m.texture = tex;
  m.triangles = {{0, 1, 2}, {1, 3, 2}};
  write_mesh(m, dir_ / "tex.obj");
  EXPECT_TRUE(fs::exists(dir_ / "tex.mtl"));
  const Mesh back = load_mesh(dir_ / "tex.obj");
  expect_identical(m, back);
}

TEST_F(MeshFiles, ConflictingTexcoordsSplitVertices) {
  write_png(dir_ / "t.png", synth::noise_image(4, 4, 1));
  write_text(dir_ / "m.mtl", "newmtl skin\nmap_Kd t.png\n");
  const fs::path p = write_text(dir_ / "m.obj",
                                "mtllib m.mtl\nusemtl skin\n"
                                "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\n"
                                "vt 0 0\nvt 1 0\nvt 0 1\nvt 1 1\nvt 0.5 0.5\n"
                                "f 1/1 2/2 3/3\nf 2/5 4/4 3/3\n");
  const Mesh m = load_mesh(p);
  EXPECT_EQ(m.vertices.size(), 5u);
  EXPECT_EQ(m.triangles[1][0], 4u);
  EXPECT_EQ(m.vertices[4], m.vertices[1]);
  EXPECT_EQ(m.uvs[4], Vec2(0.5, 0.5));
}

TEST(Bounds, UnitCube) {
  const Mesh cube = synth::make_box(Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(1, 1, 1));
  const Aabb b = compute_bounds(cube);
  EXPECT_EQ(b.min, Vec3(0, 0, 0));
  EXPECT_EQ(b.max, Vec3(1, 1, 1));
}

TEST(Bounds, SingleVertex) {
  Mesh m;
  m.vertices = {Vec3(2, 3, 4)};
  const Aabb b = compute_bounds(m);
  EXPECT_EQ(b.min, Vec3(2, 3, 4));
  EXPECT_EQ(b.max, Vec3(2, 3, 4));
}

TEST(Bounds, MatchesNaiveLoop) {
  std::mt19937_64 rng(9);
  const Mesh m = random_mesh(rng, 1000);
  double lo[3], hi[3];
  for (int k = 0; k < 3; ++k) {
    lo[k] = std::numeric_limits<double>::infinity();
    hi[k] = -lo[k];
  }
  for (const Vec3& v : m.vertices) {
    for (int k = 0; k < 3; ++k) {
      if (v[k] < lo[k]) lo[k] = v[k];
      if (v[k] > hi[k]) hi[k] = v[k];
    }
  }
  const Aabb b = compute_bounds(m);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(b.min[k], lo[k]);
    EXPECT_EQ(b.max[k], hi[k]);
  }
}

TEST(Normalize, UnitCubeToHeightTwo) {
  const Mesh cube = synth::make_box(Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(1, 1, 1));
  const Aabb b = compute_bounds(normalize_mesh(cube, 2.0));
  EXPECT_NEAR(b.extent().y(), 2.0, 1e-12);
  EXPECT_NEAR(b.max.y(), 0.0, 1e-12);  // lowest point (largest y) on the ground
  EXPECT_NEAR(b.center().x(), 0.0, 1e-12);
  EXPECT_NEAR(b.center().z(), 0.0, 1e-12);
  EXPECT_NEAR(b.extent().x(), 2.0, 1e-12);
}

TEST(Normalize, AlreadyNormalizedIsUnchanged) {
  const synth::Figure fig = synth::make_figure();
  const Mesh n = normalize_mesh(fig.mesh, 1.0);
  for (std::size_t i = 0; i < n.vertices.size(); ++i) {
    EXPECT_LT((n.vertices[i] - fig.mesh.vertices[i]).norm(), 1e-12);
  }
}

TEST(Normalize, IdempotentAndScaleEquivariant) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> scale(0.01, 100.0), height(0.1, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Mesh m = random_mesh(rng, 50);
    const double h = height(rng);
    const Mesh once = normalize_mesh(m, h);
    const Mesh twice = normalize_mesh(once, h);
    Mesh scaled = m;
    const double s = scale(rng);
    for (Vec3& v : scaled.vertices) v *= s;
    const Mesh from_scaled = normalize_mesh(scaled, h);
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
      EXPECT_LT((once.vertices[i] - twice.vertices[i]).norm(), 1e-9);
      EXPECT_LT((once.vertices[i] - from_scaled.vertices[i]).norm(), 1e-9);
    }
    const Aabb b = compute_bounds(once);
    EXPECT_NEAR(b.extent().y(), h, 1e-9);
    EXPECT_NEAR(b.max.y(), 0.0, 1e-9);
  }
}

TEST(Normalize, RejectsDegenerateInput) {
  Mesh flat = synth::make_box(Vec3(0, 0, 0), Vec3(1, 0, 1), Vec3(1, 1, 1));
  EXPECT_EQ(code_of([&] { normalize_mesh(flat, 1.0); }), ErrorCode::DegenerateMesh);
  const Mesh cube = synth::make_box(Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(1, 1, 1));
  EXPECT_EQ(code_of([&] { normalize_mesh(cube, 0.0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { normalize_mesh(cube, -1.0); }), ErrorCode::InvalidArgument);
}

TEST(Reorient, FileUpAxesMapToCanonicalUp) {
  // A point one unit "up" in the file frame must end at y = -1.
  Mesh m = synth::make_box(Vec3(0, 0, 0), Vec3(0.1, 0.1, 0.1), Vec3(1, 1, 1));
  m.vertices.push_back(Vec3::Zero());
  for (auto [axis, up] : {std::pair{UpAxis::PosY, Vec3(0, 1, 0)}, std::pair{UpAxis::NegY, Vec3(0, -1, 0)},
                          std::pair{UpAxis::PosZ, Vec3(0, 0, 1)}, std::pair{UpAxis::NegZ, Vec3(0, 0, -1)}}) {
    m.vertices.back() = up;
    const Mesh r = reorient_up(m, axis);
    EXPECT_LT((r.vertices.back() - Vec3(0, -1, 0)).norm(), 1e-15);
  }
  EXPECT_EQ(parse_up_axis("+z"), UpAxis::PosZ);
  EXPECT_THROW(parse_up_axis("up"), Error);
}

TEST(Inspect, FlagsDegenerateAndNonManifold) {
  Mesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, -1, 0), Vec3(0, 0, 1), Vec3(2, 0, 0)};
  m.colors.assign(m.vertices.size(), Vec3(1, 1, 1));
  // Edge 0-1 shared by three triangles; the last one is collinear.
  m.triangles = {{0, 1, 2}, {1, 0, 3}, {0, 1, 4}, {0, 1, 5}};
  const MeshReport r = inspect_mesh(m);
  EXPECT_EQ(r.vertex_count, 6u);
  EXPECT_EQ(r.triangle_count, 4u);
  EXPECT_EQ(r.degenerate_triangles, std::vector<std::size_t>{3});
  EXPECT_EQ(r.non_manifold_edges, 1u);
  EXPECT_NE(r.to_text().find("non_manifold_edges: 1"), std::string::npos);
}

TEST(Validate, CatchesBrokenInvariants) {
  Mesh m = synth::make_box(Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(1, 1, 1));
  EXPECT_NO_THROW(m.validate());
  Mesh bad = m;
  bad.triangles[0][2] = 8;
  EXPECT_THROW(bad.validate(), Error);
  bad = m;
  bad.colors.pop_back();
  EXPECT_THROW(bad.validate(), Error);
  bad = m;
  bad.vertices[0].x() = std::nan("");
  EXPECT_THROW(bad.validate(), Error);
}
