#pragma once

// Test-only oracles, kept independent of the implementation paths they
// check: dense materializations by definition, finite differences, and
// tiny reference meshes.

#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "arapreg/arap.hpp"
#include "arapreg/mesh.hpp"
#include "arapreg/rng.hpp"
#include "arapreg/synthetic.hpp"

namespace oracles {

inline arapreg::Mesh tetrahedron() {
  return arapreg::Mesh::build({{0, 0, 0},
                               {1, 0, 0},
                               {0.5, std::sqrt(3.0) / 2.0, 0},
                               {0.5, std::sqrt(3.0) / 6.0, std::sqrt(2.0 / 3.0)}},
                              {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}});
}

// 4 rings of 5 vertices; straight tube.
inline arapreg::Mesh cylinder20() {
  arapreg::BendingBarSpec spec;
  spec.segments = 3;
  spec.ring_vertices = 5;
  spec.base_radius = 0.3;
  return arapreg::bending_bar_mesh(spec, arapreg::BarParameters{});
}

// Dense ARAP Hessian assembled from scratch (kron + dense blocks), sharing
// nothing with ArapHessian beyond the published formulas.
inline Eigen::MatrixXd dense_arap_hessian(const arapreg::Mesh& mesh,
                                          const arapreg::VertexField& rest) {
  const int n = mesh.vertex_count();
  Eigen::MatrixXd lk = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  for (int i = 0; i < n; ++i) {
    for (const auto& [j, e] : mesh.neighbors[static_cast<size_t>(i)]) {
      const double w = mesh.edge_weight(e);
      const Eigen::Vector3d v = rest.segment<3>(3 * i) - rest.segment<3>(3 * j);
      lk.block<3, 3>(3 * i, 3 * i) += w * Eigen::Matrix3d::Identity();
      lk.block<3, 3>(3 * i, 3 * j) -= w * Eigen::Matrix3d::Identity();
      const Eigen::Matrix3d vx = arapreg::cross_matrix(v);
      a.block<3, 3>(3 * i, 3 * i) += w * vx;
      a.block<3, 3>(3 * i, 3 * j) -= w * vx;
      d.block<3, 3>(3 * i, 3 * i) +=
          w * (v.squaredNorm() * Eigen::Matrix3d::Identity() - v * v.transpose());
    }
  }
  // regularize exactly like the implementation so comparisons are exact
  for (int i = 0; i < n; ++i) {
    Eigen::Matrix3d blk = d.block<3, 3>(3 * i, 3 * i);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(blk);
    if (es.eigenvalues()[0] < 1e-9 * blk.trace())
      d.block<3, 3>(3 * i, 3 * i) += 1e-9 * blk.trace() * Eigen::Matrix3d::Identity();
  }
  return 4.0 * lk - 2.0 * a.transpose() * d.inverse() * a;
}

inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline double rel_error(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  return (got - want).norm() / std::max(want.norm(), 1e-12);
}

inline Eigen::VectorXd random_field(arapreg::Rng& rng, int size3) {
  return rng.normal_vector(size3);
}

inline Eigen::Matrix3d rotation_about(const Eigen::Vector3d& axis, double angle) {
  const Eigen::Matrix3d kx = arapreg::cross_matrix(axis.normalized());
  return Eigen::Matrix3d::Identity() + std::sin(angle) * kx + (1.0 - std::cos(angle)) * kx * kx;
}

}  // namespace oracles
