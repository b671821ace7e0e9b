#pragma once

#include <cmath>
#include <map>
#include <random>

#include "drape/mesh.hpp"

namespace drape::testutil {

// Triangulated planar grid in z = 0, quads split along one diagonal.
inline TriMesh grid_mesh(int nx, int ny, double spacing = 0.1) {
  TriMesh m;
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      m.vertices.emplace_back(x * spacing, y * spacing, 0.0);
    }
  }
  auto id = [nx](int x, int y) { return y * nx + x; };
  for (int y = 0; y + 1 < ny; ++y) {
    for (int x = 0; x + 1 < nx; ++x) {
      m.faces.push_back({id(x, y), id(x + 1, y), id(x + 1, y + 1)});
      m.faces.push_back({id(x, y), id(x + 1, y + 1), id(x, y + 1)});
    }
  }
  return m;
}

// Grid with jittered positions; a generic "random mesh" for property tests.
inline TriMesh random_mesh(std::mt19937_64& rng, int nx = 5, int ny = 4) {
  TriMesh m = grid_mesh(nx, ny);
  std::uniform_real_distribution<double> jitter(-0.03, 0.03);
  for (auto& v : m.vertices) v += Vec3(jitter(rng), jitter(rng), jitter(rng));
  return m;
}

// Unit icosphere via subdivision; analytic sphere oracle for normals.
inline TriMesh icosphere(int subdivisions = 2) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriMesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : m.vertices) v.normalize();
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},
             {5, 11, 4}, {11, 10, 2}, {10, 7, 6},  {7, 1, 8},  {3, 9, 4},   {3, 4, 2},
             {3, 2, 6},  {3, 6, 8},  {3, 8, 9},   {4, 9, 5},  {2, 4, 11},  {6, 2, 10},
             {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Vec3 p = (m.vertices[a] + m.vertices[b]).normalized();
      m.vertices.push_back(p);
      const int idx = m.vertex_count() - 1;
      midpoint[key] = idx;
      return idx;
    };
    std::vector<std::array<int, 3>> faces;
    for (const auto& f : m.faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      faces.push_back({f[0], ab, ca});
      faces.push_back({f[1], bc, ab});
      faces.push_back({f[2], ca, bc});
      faces.push_back({ab, bc, ca});
    }
    m.faces = std::move(faces);
  }
  return m;
}

inline std::vector<int> random_permutation(int n, std::mt19937_64& rng) {
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

}  // namespace drape::testutil
