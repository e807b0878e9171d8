#include "arapreg/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <map>
#include <stdexcept>
#include <vector>

namespace arapreg {

VertexField Mesh::positions() const {
  VertexField g(3 * vertex_count());
  for (int i = 0; i < vertex_count(); ++i) g.segment<3>(3 * i) = vertices[static_cast<size_t>(i)];
  return g;
}

void Mesh::set_positions(const VertexField& g) {
  if (g.size() != 3 * vertex_count())
    throw std::runtime_error("set_positions: field length does not match mesh");
  for (int i = 0; i < vertex_count(); ++i) vertices[static_cast<size_t>(i)] = g.segment<3>(3 * i);
}

bool Mesh::same_connectivity(const Mesh& other) const {
  return vertices.size() == other.vertices.size() && faces == other.faces;
}

namespace {

void finalize_edges(Mesh& m, const std::map<std::pair<int, int>, int>& edge_index);

}  // namespace

Mesh Mesh::build(std::vector<Eigen::Vector3d> vertices,
                 std::vector<std::array<int, 3>> faces) {
  Mesh m;
  m.vertices = std::move(vertices);
  m.faces = std::move(faces);
  const int n = m.vertex_count();
  if (n == 0) throw std::runtime_error("mesh has no vertices");

  std::map<std::pair<int, int>, int> edge_index;
  for (size_t f = 0; f < m.faces.size(); ++f) {
    const auto& tri = m.faces[f];
    for (int c = 0; c < 3; ++c) {
      if (tri[static_cast<size_t>(c)] < 0 || tri[static_cast<size_t>(c)] >= n)
        throw std::runtime_error("face " + std::to_string(f) + " references vertex " +
                                 std::to_string(tri[static_cast<size_t>(c)]) + " out of range");
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw std::runtime_error("degenerate face " + std::to_string(f) +
                               " with repeated vertex indices");
    for (int c = 0; c < 3; ++c) {
      int a = tri[static_cast<size_t>(c)];
      int b = tri[static_cast<size_t>((c + 1) % 3)];
      if (a > b) std::swap(a, b);
      edge_index.emplace(std::make_pair(a, b), -1);
    }
  }
  finalize_edges(m, edge_index);
  return m;
}

Mesh Mesh::from_edges(std::vector<Eigen::Vector3d> vertices,
                      std::vector<std::pair<int, int>> edges) {
  Mesh m;
  m.vertices = std::move(vertices);
  const int n = m.vertex_count();
  if (n == 0) throw std::runtime_error("mesh has no vertices");
  std::map<std::pair<int, int>, int> edge_index;
  for (auto [i, j] : edges) {
    if (i > j) std::swap(i, j);
    if (i < 0 || j >= n || i == j) throw std::runtime_error("invalid edge");
    edge_index.emplace(std::make_pair(i, j), -1);
  }
  finalize_edges(m, edge_index);
  return m;
}

namespace {

void finalize_edges(Mesh& m, const std::map<std::pair<int, int>, int>& edge_index) {
  const int n = m.vertex_count();
  if (edge_index.empty()) throw std::runtime_error("mesh has no edges");

  m.edges.reserve(edge_index.size());
  for (const auto& kv : edge_index) m.edges.push_back(kv.first);
  m.weights.assign(m.edges.size(), 1.0);

  m.neighbors.assign(static_cast<size_t>(n), {});
  for (int e = 0; e < m.edge_count(); ++e) {
    const auto [i, j] = m.edges[static_cast<size_t>(e)];
    m.neighbors[static_cast<size_t>(i)].emplace_back(j, e);
    m.neighbors[static_cast<size_t>(j)].emplace_back(i, e);
  }

  // connectivity check (BFS over the edge graph)
  std::vector<char> seen(static_cast<size_t>(n), 0);
  std::vector<int> stack = {0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (const auto& [u, e] : m.neighbors[static_cast<size_t>(v)]) {
      if (!seen[static_cast<size_t>(u)]) {
        seen[static_cast<size_t>(u)] = 1;
        ++reached;
        stack.push_back(u);
      }
    }
  }
  if (reached != n)
    throw std::runtime_error("mesh edge graph is disconnected (" + std::to_string(reached) +
                             " of " + std::to_string(n) + " vertices reachable)");
}

}  // namespace

Mesh cotangent_weights(const Mesh& mesh) {
  Mesh out = mesh;
  std::vector<double> acc(mesh.weights.size(), 0.0);

  auto edge_of = [&](int a, int b) {
    for (const auto& [u, e] : mesh.neighbors[static_cast<size_t>(std::min(a, b))])
      if (u == std::max(a, b)) return e;
    throw std::logic_error("edge lookup failed");
  };

  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& tri = mesh.faces[f];
    for (int c = 0; c < 3; ++c) {
      const int apex = tri[static_cast<size_t>(c)];
      const int a = tri[static_cast<size_t>((c + 1) % 3)];
      const int b = tri[static_cast<size_t>((c + 2) % 3)];
      const Eigen::Vector3d u = mesh.vertices[static_cast<size_t>(a)] - mesh.vertices[static_cast<size_t>(apex)];
      const Eigen::Vector3d v = mesh.vertices[static_cast<size_t>(b)] - mesh.vertices[static_cast<size_t>(apex)];
      const double twice_area = u.cross(v).norm();
      if (twice_area <= 0.0)
        throw std::runtime_error("degenerate (zero-area) face " + std::to_string(f));
      acc[static_cast<size_t>(edge_of(a, b))] += 0.5 * u.dot(v) / twice_area;
    }
  }
  for (size_t e = 0; e < acc.size(); ++e) out.weights[e] = std::max(0.0, acc[e]);
  return out;
}

Eigen::SparseMatrix<double> graph_laplacian(const Mesh& mesh) {
  const int n = mesh.vertex_count();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(n) + 2 * mesh.edges.size());
  for (int i = 0; i < n; ++i) {
    double diag = 0.0;
    for (const auto& [j, e] : mesh.neighbors[static_cast<size_t>(i)]) {
      const double w = mesh.edge_weight(e);
      trips.emplace_back(i, j, -w);
      diag += w;
    }
    trips.emplace_back(i, i, diag);
  }
  Eigen::SparseMatrix<double> L(n, n);
  L.setFromTriplets(trips.begin(), trips.end());
  return L;
}

}  // namespace arapreg
