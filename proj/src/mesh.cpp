#include "drape/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace drape {

void validate(const TriMesh& mesh) {
  const int n = mesh.vertex_count();
  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& face = mesh.faces[f];
    for (int k = 0; k < 3; ++k) {
      if (face[k] < 0 || face[k] >= n) {
        throw ValidationError("face " + std::to_string(f) + " references vertex " +
                              std::to_string(face[k]) + " out of range [0, " +
                              std::to_string(n) + ")");
      }
    }
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
      throw ValidationError("face " + std::to_string(f) + " is degenerate");
    }
  }
}

std::vector<std::pair<int, int>> mesh_edges(const TriMesh& mesh) {
  std::set<std::pair<int, int>> uniq;
  for (const auto& f : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      int a = f[k], b = f[(k + 1) % 3];
      uniq.emplace(std::min(a, b), std::max(a, b));
    }
  }
  return {uniq.begin(), uniq.end()};
}

std::vector<std::vector<int>> vertex_neighbors(const TriMesh& mesh) {
  std::vector<std::vector<int>> nbrs(mesh.vertex_count());
  for (const auto& [u, v] : mesh_edges(mesh)) {
    nbrs[u].push_back(v);
    nbrs[v].push_back(u);
  }
  for (auto& ring : nbrs) std::sort(ring.begin(), ring.end());
  return nbrs;
}

namespace {

// Vertex index before any '/': "12/3/4" -> 12. OBJ indices are 1-based.
int parse_face_index(const std::string& token, int vertex_count, int line_no) {
  size_t slash = token.find('/');
  const std::string head = slash == std::string::npos ? token : token.substr(0, slash);
  int idx = 0;
  try {
    size_t used = 0;
    idx = std::stoi(head, &used);
    if (used != head.size()) throw std::invalid_argument(head);
  } catch (const std::exception&) {
    throw ParseError("bad face index '" + token + "'", line_no);
  }
  if (idx < 1 || idx > vertex_count) {
    throw ValidationError("face index " + std::to_string(idx) + " out of range at line " +
                          std::to_string(line_no));
  }
  return idx - 1;
}

}  // namespace

TriMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  TriMesh mesh;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z())) {
        throw ParseError("malformed vertex record", line_no);
      }
      mesh.vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<std::string> tokens;
      std::string tok;
      while (ls >> tok) tokens.push_back(tok);
      if (tokens.size() != 3) {
        throw ParseError("face with " + std::to_string(tokens.size()) +
                             " vertices; only triangles are supported",
                         line_no);
      }
      std::array<int, 3> face{};
      for (int k = 0; k < 3; ++k) {
        face[k] = parse_face_index(tokens[k], mesh.vertex_count(), line_no);
      }
      mesh.faces.push_back(face);
    }
    // vn / vt / o / g / s / usemtl / mtllib etc. are ignored.
  }
  validate(mesh);
  return mesh;
}

void save_obj(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  char buf[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.9f %.9f %.9f\n", v.x(), v.y(), v.z());
    out << buf;
  }
  for (const auto& f : mesh.faces) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<Vec3> vertex_normals(const TriMesh& mesh) {
  validate(mesh);
  std::vector<Vec3> acc(mesh.vertex_count(), Vec3::Zero());
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    // Cross product magnitude is twice the face area, so summing raw cross
    // products area-weights the average.
    const Vec3 fn = (b - a).cross(c - a);
    acc[f[0]] += fn;
    acc[f[1]] += fn;
    acc[f[2]] += fn;
  }
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const double norm = acc[i].norm();
    if (norm < 1e-15) {
      throw ValidationError("vertex " + std::to_string(i) +
                            " has a zero normal (isolated or fully cancelled)");
    }
    acc[i] /= norm;
  }
  return acc;
}

TriMesh laplacian_smooth(const TriMesh& mesh, int iterations, double lambda) {
  if (lambda < 0.0 || lambda > 1.0) {
    throw ValidationError("laplacian_smooth lambda must be in [0, 1], got " +
                          std::to_string(lambda));
  }
  if (iterations < 0) throw ValidationError("laplacian_smooth iterations must be >= 0");
  validate(mesh);

  TriMesh out = mesh;
  if (lambda == 0.0 || iterations == 0) return out;

  const auto nbrs = vertex_neighbors(mesh);
  std::vector<Vec3> next(out.vertices.size());
  for (int it = 0; it < iterations; ++it) {
    for (size_t i = 0; i < out.vertices.size(); ++i) {
      if (nbrs[i].empty()) {
        next[i] = out.vertices[i];
        continue;
      }
      Vec3 avg = Vec3::Zero();
      for (int j : nbrs[i]) avg += out.vertices[j];
      avg /= static_cast<double>(nbrs[i].size());
      next[i] = out.vertices[i] + lambda * (avg - out.vertices[i]);
    }
    out.vertices.swap(next);
  }
  return out;
}

IndicatorMap nearest_vertex_map(const TriMesh& garment, const TriMesh& body) {
  if (garment.vertices.empty() || body.vertices.empty()) {
    throw ValidationError("nearest_vertex_map requires nonempty meshes");
  }
  IndicatorMap map;
  map.garment_to_body.resize(garment.vertices.size());
  for (size_t g = 0; g < garment.vertices.size(); ++g) {
    int best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (size_t b = 0; b < body.vertices.size(); ++b) {
      const double d2 = (garment.vertices[g] - body.vertices[b]).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = static_cast<int>(b);
      }
    }
    map.garment_to_body[g] = best;
  }
  return map;
}

Eigen::MatrixXd MeshGraph::dense_adjacency() const {
  const int n = node_count();
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
  for (size_t e = 0; e < nbr_src.size(); ++e) adj(nbr_dst[e], nbr_src[e]) = 1.0;
  return adj;
}

MeshGraph make_graph(Eigen::MatrixXd features, std::vector<std::pair<int, int>> edges) {
  MeshGraph g;
  const int n = static_cast<int>(features.rows());
  g.features = std::move(features);

  std::set<std::pair<int, int>> uniq;
  for (auto [u, v] : edges) {
    if (u < 0 || u >= n || v < 0 || v >= n) {
      throw ValidationError("graph edge references node out of range");
    }
    if (u == v) continue;
    uniq.emplace(std::min(u, v), std::max(u, v));
  }
  g.edges.assign(uniq.begin(), uniq.end());

  // Directed adjacency with self loops, sorted by (dst, src) so each node's
  // incoming neighborhood is a contiguous segment.
  std::vector<std::pair<int, int>> directed;  // (dst, src)
  directed.reserve(2 * g.edges.size() + n);
  for (auto [u, v] : g.edges) {
    directed.emplace_back(u, v);
    directed.emplace_back(v, u);
  }
  for (int i = 0; i < n; ++i) directed.emplace_back(i, i);
  std::sort(directed.begin(), directed.end());
  g.nbr_src.reserve(directed.size());
  g.nbr_dst.reserve(directed.size());
  for (auto [d, s] : directed) {
    g.nbr_dst.push_back(d);
    g.nbr_src.push_back(s);
  }
  return g;
}

MeshGraph build_graph(const TriMesh& mesh, Eigen::MatrixXd features) {
  if (features.rows() != mesh.vertex_count()) {
    throw ValidationError("feature rows (" + std::to_string(features.rows()) +
                          ") != vertex count (" + std::to_string(mesh.vertex_count()) + ")");
  }
  validate(mesh);
  return make_graph(std::move(features), mesh_edges(mesh));
}

MeshGraph permute_graph(const MeshGraph& graph, const std::vector<int>& perm) {
  const int n = graph.node_count();
  if (static_cast<int>(perm.size()) != n) {
    throw ValidationError("permutation size mismatch");
  }
  Eigen::MatrixXd features(n, graph.features.cols());
  for (int i = 0; i < n; ++i) features.row(perm[i]) = graph.features.row(i);
  std::vector<std::pair<int, int>> edges;
  edges.reserve(graph.edges.size());
  for (auto [u, v] : graph.edges) edges.emplace_back(perm[u], perm[v]);
  return make_graph(std::move(features), std::move(edges));
}

}  // namespace drape
