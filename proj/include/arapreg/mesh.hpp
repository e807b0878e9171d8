#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace arapreg {

// A per-vertex 3D field flattened vertex-major: vertex i occupies slots
// [3i, 3i+3). All displacement fields, generator outputs and Hessian
// operands use this layout.
using VertexField = Eigen::VectorXd;

inline Eigen::Vector3d field_vertex(const VertexField& x, int i) {
  return x.segment<3>(3 * i);
}

// Fixed-connectivity triangle mesh. Edges are undirected, stored once with
// i < j, and carry a nonnegative weight each. The edge graph must be
// connected; build() rejects anything else.
struct Mesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<std::pair<int, int>> edges;
  std::vector<double> weights;
  // neighbors[i] lists (j, edge index) for every edge incident to i.
  std::vector<std::vector<std::pair<int, int>>> neighbors;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int edge_count() const { return static_cast<int>(edges.size()); }

  double edge_weight(int e) const { return weights[static_cast<size_t>(e)]; }

  VertexField positions() const;
  void set_positions(const VertexField& g);

  bool same_connectivity(const Mesh& other) const;

  // Derives the edge set from faces, assigns uniform weights w_ij = 1 and
  // validates all invariants (index bounds, no degenerate faces, connected
  // edge graph). Throws std::runtime_error on violation.
  static Mesh build(std::vector<Eigen::Vector3d> vertices,
                    std::vector<std::array<int, 3>> faces);

  // Face-less construction from an explicit edge list (Hessian diagnostics
  // on wireframes, e.g. a single edge). Same connectivity checks.
  static Mesh from_edges(std::vector<Eigen::Vector3d> vertices,
                         std::vector<std::pair<int, int>> edges);
};

// Replaces the uniform weights by clamped cotangent weights
// w_ij = max(0, 1/2 (cot a_ij + cot b_ij)) over the triangles adjacent to
// edge (i,j). Throws on zero-area faces, naming the face.
Mesh cotangent_weights(const Mesh& mesh);

// Weighted graph Laplacian: L_ii = sum_k w_ik, L_ij = -w_ij on edges.
Eigen::SparseMatrix<double> graph_laplacian(const Mesh& mesh);

}  // namespace arapreg
