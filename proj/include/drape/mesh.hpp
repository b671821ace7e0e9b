#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <utility>
#include <vector>

#include "drape/errors.hpp"

namespace drape {

using Vec3 = Eigen::Vector3d;

// Indexed triangle mesh; garments and bodies both use this. Positions are in
// meters, faces are counter-clockwise vertex-index triples.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int face_count() const { return static_cast<int>(faces.size()); }
};

// Throws ValidationError on out-of-range or degenerate faces.
void validate(const TriMesh& mesh);

// Unique undirected edge set derived from faces, each pair stored with u < v.
std::vector<std::pair<int, int>> mesh_edges(const TriMesh& mesh);

// 1-ring neighbor lists (no self entries), derived from mesh_edges.
std::vector<std::vector<int>> vertex_neighbors(const TriMesh& mesh);

TriMesh load_obj(const std::string& path);
void save_obj(const TriMesh& mesh, const std::string& path);

// Area-weighted vertex normals, unit length. A vertex referenced by no face
// has no defined normal and trips a ValidationError.
std::vector<Vec3> vertex_normals(const TriMesh& mesh);

// Uniform-weight Laplacian smoothing: each iteration moves every vertex toward
// the average of its 1-ring by `lambda`. Faces are untouched.
TriMesh laplacian_smooth(const TriMesh& mesh, int iterations, double lambda);

// Fixed garment-vertex -> body-vertex association (the indicator map), found
// by nearest neighbor on the rest meshes with ties broken by lowest body index.
struct IndicatorMap {
  std::vector<int> garment_to_body;

  int size() const { return static_cast<int>(garment_to_body.size()); }
};

IndicatorMap nearest_vertex_map(const TriMesh& garment, const TriMesh& body);

// Node-feature matrix plus symmetric adjacency with self loops. `edges` holds
// the unique undirected pairs (u < v, no self loops); `nbr_src`/`nbr_dst` are
// the directed adjacency including self loops, sorted by (dst, src), which is
// the layout attention and segment ops consume.
struct MeshGraph {
  Eigen::MatrixXd features;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> nbr_src;
  std::vector<int> nbr_dst;

  int node_count() const { return static_cast<int>(features.rows()); }
  int feature_width() const { return static_cast<int>(features.cols()); }
  Eigen::MatrixXd dense_adjacency() const;
};

// Assembles a MeshGraph from an explicit edge list (self loops added here).
MeshGraph make_graph(Eigen::MatrixXd features, std::vector<std::pair<int, int>> edges);

// Graph over the mesh's vertices with the given per-vertex feature rows.
MeshGraph build_graph(const TriMesh& mesh, Eigen::MatrixXd features);

// Relabels nodes: node i of the input becomes node perm[i] of the output.
MeshGraph permute_graph(const MeshGraph& graph, const std::vector<int>& perm);

}  // namespace drape
