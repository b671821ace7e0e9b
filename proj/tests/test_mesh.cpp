#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "drape/mesh.hpp"
#include "test_util.hpp"

using namespace drape;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("load_obj reads a minimal file") {
  auto p = temp_file("drape_min.obj");
  write_text(p, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  TriMesh m = load_obj(p.string());
  CHECK(m.vertex_count() == 3);
  CHECK(m.face_count() == 1);
  CHECK(m.faces[0] == std::array<int, 3>{0, 1, 2});
}

TEST_CASE("load_obj rejects out-of-range face indices") {
  auto p = temp_file("drape_oob.obj");
  write_text(p, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 5\n");
  CHECK_THROWS_AS(load_obj(p.string()), ValidationError);
}

TEST_CASE("load_obj reports the offending line") {
  auto p = temp_file("drape_bad.obj");
  write_text(p, "v 0 0 0\nv 1 0 x\n");
  try {
    load_obj(p.string());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
}

TEST_CASE("load_obj skips normals, uvs, and slash-form face tokens") {
  auto p = temp_file("drape_rich.obj");
  write_text(p,
             "# comment\nvn 0 0 1\nvt 0 0\nv 0 0 0\nv 1 0 0\nv 0 1 0\n"
             "f 1/1/1 2/1/1 3/1/1\n");
  TriMesh m = load_obj(p.string());
  CHECK(m.vertex_count() == 3);
  CHECK(m.face_count() == 1);
}

TEST_CASE("save_obj writes one record per vertex and face") {
  TriMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.faces = {{0, 1, 2}};
  auto p = temp_file("drape_tri.obj");
  save_obj(m, p.string());
  std::ifstream in(p);
  std::string line;
  int v = 0, f = 0;
  while (std::getline(in, line)) {
    if (line.rfind("v ", 0) == 0) ++v;
    if (line.rfind("f ", 0) == 0) ++f;
  }
  CHECK(v == 3);
  CHECK(f == 1);
}

TEST_CASE("save_obj of an empty mesh produces an empty valid file") {
  TriMesh empty;
  auto p = temp_file("drape_empty.obj");
  save_obj(empty, p.string());
  TriMesh back = load_obj(p.string());
  CHECK(back.vertex_count() == 0);
  CHECK(back.face_count() == 0);
}

TEST_CASE("save/load round trip preserves meshes") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    TriMesh m = testutil::random_mesh(rng);
    auto p = temp_file("drape_rt.obj");
    save_obj(m, p.string());
    TriMesh back = load_obj(p.string());
    REQUIRE(back.vertex_count() == m.vertex_count());
    REQUIRE(back.faces == m.faces);
    for (int i = 0; i < m.vertex_count(); ++i) {
      CHECK((back.vertices[i] - m.vertices[i]).norm() <= 1e-6);
    }
  }
}

TEST_CASE("vertex_normals on a CCW triangle in the z=0 plane") {
  TriMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.faces = {{0, 1, 2}};
  auto n = vertex_normals(m);
  for (const auto& v : n) CHECK((v - Vec3(0, 0, 1)).norm() <= 1e-12);
}

TEST_CASE("vertex_normals on an icosphere point radially") {
  TriMesh sphere = testutil::icosphere(2);
  auto n = vertex_normals(sphere);
  for (int i = 0; i < sphere.vertex_count(); ++i) {
    const Vec3 radial = sphere.vertices[i].normalized();
    const double angle = std::acos(std::clamp(n[i].dot(radial), -1.0, 1.0));
    CHECK(angle <= 0.05);
  }
}

TEST_CASE("vertex_normals negate under face reversal and have unit length") {
  std::mt19937_64 rng(11);
  TriMesh m = testutil::random_mesh(rng);
  auto n = vertex_normals(m);
  TriMesh rev = m;
  for (auto& f : rev.faces) std::swap(f[1], f[2]);
  auto nr = vertex_normals(rev);
  for (int i = 0; i < m.vertex_count(); ++i) {
    CHECK(std::abs(n[i].norm() - 1.0) <= 1e-9);
    CHECK((n[i] + nr[i]).norm() <= 1e-12);
  }
}

TEST_CASE("vertex_normals flags isolated vertices") {
  TriMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {5, 5, 5}};
  m.faces = {{0, 1, 2}};
  CHECK_THROWS_AS(vertex_normals(m), ValidationError);
}

TEST_CASE("build_graph of a triangle is fully connected with self loops") {
  TriMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.faces = {{0, 1, 2}};
  MeshGraph g = build_graph(m, Eigen::MatrixXd::Zero(3, 2));
  CHECK(g.dense_adjacency().isApprox(Eigen::MatrixXd::Ones(3, 3)));
}

TEST_CASE("build_graph of two disconnected triangles is block diagonal") {
  TriMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {5, 0, 0}, {6, 0, 0}, {5, 1, 0}};
  m.faces = {{0, 1, 2}, {3, 4, 5}};
  MeshGraph g = build_graph(m, Eigen::MatrixXd::Zero(6, 1));
  Eigen::MatrixXd adj = g.dense_adjacency();
  CHECK(adj.topLeftCorner(3, 3).isApprox(Eigen::MatrixXd::Ones(3, 3)));
  CHECK(adj.bottomRightCorner(3, 3).isApprox(Eigen::MatrixXd::Ones(3, 3)));
  CHECK(adj.topRightCorner(3, 3).isZero());
  CHECK(adj.bottomLeftCorner(3, 3).isZero());
}

TEST_CASE("build_graph adjacency is symmetric with self loops") {
  std::mt19937_64 rng(3);
  TriMesh m = testutil::random_mesh(rng);
  MeshGraph g = build_graph(m, Eigen::MatrixXd::Random(m.vertex_count(), 4));
  Eigen::MatrixXd adj = g.dense_adjacency();
  CHECK(adj.isApprox(adj.transpose()));
  CHECK(adj.diagonal().isApprox(Eigen::VectorXd::Ones(m.vertex_count())));
}

TEST_CASE("build_graph rejects row-count mismatch") {
  TriMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.faces = {{0, 1, 2}};
  CHECK_THROWS_AS(build_graph(m, Eigen::MatrixXd::Zero(4, 2)), ValidationError);
}

TEST_CASE("laplacian_smooth with lambda 0 is the identity") {
  std::mt19937_64 rng(5);
  TriMesh m = testutil::random_mesh(rng);
  TriMesh s = laplacian_smooth(m, 25, 0.0);
  for (int i = 0; i < m.vertex_count(); ++i) {
    CHECK(s.vertices[i] == m.vertices[i]);
  }
  CHECK(s.faces == m.faces);
}

TEST_CASE("laplacian_smooth fixes the interior of a flat symmetric grid") {
  TriMesh grid = testutil::grid_mesh(7, 7);
  TriMesh s = laplacian_smooth(grid, 1, 0.5);
  for (int y = 1; y < 6; ++y) {
    for (int x = 1; x < 6; ++x) {
      const int i = y * 7 + x;
      CHECK((s.vertices[i] - grid.vertices[i]).norm() <= 1e-12);
    }
  }
  // The grid stays planar under any amount of smoothing.
  TriMesh s20 = laplacian_smooth(grid, 20, 0.5);
  for (const auto& v : s20.vertices) CHECK(std::abs(v.z()) <= 1e-15);
}

TEST_CASE("laplacian_smooth shrinks an icosphere") {
  TriMesh sphere = testutil::icosphere(2);
  TriMesh s = laplacian_smooth(sphere, 20, 0.5);
  double r0 = 0, r1 = 0;
  for (const auto& v : sphere.vertices) r0 += v.norm();
  for (const auto& v : s.vertices) r1 += v.norm();
  CHECK(r1 / sphere.vertex_count() < r0 / sphere.vertex_count());
  CHECK(s.faces == sphere.faces);
}

TEST_CASE("laplacian_smooth validates lambda") {
  TriMesh m = testutil::grid_mesh(3, 3);
  CHECK_THROWS_AS(laplacian_smooth(m, 1, -0.1), ValidationError);
  CHECK_THROWS_AS(laplacian_smooth(m, 1, 1.5), ValidationError);
}

TEST_CASE("nearest_vertex_map maps an offset copy to the identity") {
  TriMesh body = testutil::grid_mesh(6, 5);
  TriMesh garment = body;
  for (auto& v : garment.vertices) v += Vec3(0, 0, 0.01);
  IndicatorMap map = nearest_vertex_map(garment, body);
  for (int i = 0; i < garment.vertex_count(); ++i) CHECK(map.garment_to_body[i] == i);
}

TEST_CASE("nearest_vertex_map breaks ties toward the lower index") {
  TriMesh garment;
  garment.vertices = {{0, 0, 0}};
  TriMesh body;
  body.vertices = {{1, 0, 0}, {2, 0, 0}};
  IndicatorMap map = nearest_vertex_map(garment, body);
  CHECK(map.garment_to_body[0] == 0);

  TriMesh tie_body;
  tie_body.vertices = {{1, 0, 0}, {-1, 0, 0}};
  CHECK(nearest_vertex_map(garment, tie_body).garment_to_body[0] == 0);
}

TEST_CASE("nearest_vertex_map matches a brute-force scan") {
  std::mt19937_64 rng(13);
  TriMesh garment = testutil::random_mesh(rng, 4, 4);
  TriMesh body = testutil::random_mesh(rng, 6, 5);
  IndicatorMap map = nearest_vertex_map(garment, body);
  for (int g = 0; g < garment.vertex_count(); ++g) {
    int best = 0;
    double best_d = (garment.vertices[g] - body.vertices[0]).norm();
    for (int b = 1; b < body.vertex_count(); ++b) {
      const double d = (garment.vertices[g] - body.vertices[b]).norm();
      if (d < best_d) {
        best_d = d;
        best = b;
      }
    }
    CHECK(map.garment_to_body[g] == best);
  }
}
