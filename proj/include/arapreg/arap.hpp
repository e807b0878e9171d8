#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "arapreg/mesh.hpp"

namespace arapreg {

inline Eigen::Matrix3d cross_matrix(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// One 3x3 rotation per vertex.
struct RotationSet {
  std::vector<Eigen::Matrix3d> rotations;
};

// Per-vertex orthogonal-Procrustes fit: O_i minimizes
// sum_{j in N(i)} w_ij |(O_i - I) v_ij - (x_i - x_j)|^2 over SO(3).
// Geometry defaults to mesh.vertices; `rest` overrides it.
RotationSet fit_rotations(const Mesh& mesh, const VertexField& x);
RotationSet fit_rotations(const Mesh& mesh, const VertexField& rest, const VertexField& x);

// ARAP deformation energy at the fitted rotations, summed over both edge
// orientations. Nonnegative; zero on rigid displacement fields.
double arap_energy(const Mesh& mesh, const VertexField& x);
double arap_energy(const Mesh& mesh, const VertexField& rest, const VertexField& x);

// Gradient of arap_energy with respect to x, with the fitted rotations held
// fixed (exact by the envelope property of the inner minimization).
VertexField arap_energy_gradient(const Mesh& mesh, const VertexField& rest, const VertexField& x);

// Sparse factored ARAP Hessian. Stored pieces are the weighted graph
// Laplacian L, the block matrix A(g) (diagonal sum_k w_ik (v_ik x),
// off-diagonal -w_ij (v_ij x)) and the inverted blocks of
// D_ii = sum_k w_ik (|v_ik|^2 I - v_ik v_ik^T).
//
// The implied operator is H = 4 L(x)I3 - 2 A^T D^-1 A: these factors make H
// the exact second-order coefficient of the energy summed over both edge
// orientations, so arap_energy(g, eps d) = 1/2 eps^2 d^T H d + O(eps^3).
struct ArapHessian {
  Eigen::SparseMatrix<double> laplacian;       // n x n
  Eigen::SparseMatrix<double> a_blocks;        // 3n x 3n
  std::vector<Eigen::Matrix3d> d_inv_blocks;   // n blocks
  std::vector<double> reg_epsilon;             // Tikhonov shift applied per block
  VertexField rest;                            // geometry the Hessian was assembled at
  int n = 0;
};

ArapHessian assemble_hessian(const Mesh& mesh);
ArapHessian assemble_hessian(const Mesh& mesh, const VertexField& rest);

// H x without materializing H.
VertexField hessian_apply(const ArapHessian& h, const VertexField& x);

// Dense materialization, for small-mesh diagnostics and oracles.
Eigen::MatrixXd hessian_dense(const ArapHessian& h);

// A(rest) x as a standalone product (the Appendix-B bilinear form).
VertexField a_apply(const Mesh& mesh, const VertexField& rest, const VertexField& x);

struct NullSpaceReport {
  int kernel_count = 0;           // eigenvalues below 1e-8 * max eigenvalue
  double max_eigenvalue = 0.0;
  std::array<double, 3> translation_residuals{};  // |H t| for unit translation fields
  std::array<double, 3> rotation_residuals{};     // |H r| for unit infinitesimal rotations
};

// Dense eigensolve diagnostic; requires n <= 200.
NullSpaceReport null_space_report(const ArapHessian& h, const Mesh& mesh);

// The 3 unit translation fields followed by the 3 unit infinitesimal
// rotation fields r_i = c x g_i about the centroid.
std::vector<VertexField> rigid_fields(const VertexField& rest);

// Schur complement M_xx - M_xy M_yy^-1 M_yx of a symmetric (p+q)x(p+q)
// matrix: the Hessian of x -> min_y 1/2 [x;y]^T M [x;y]. Requires the
// lower-right block to be positive definite.
Eigen::MatrixXd schur_hessian(const Eigen::MatrixXd& m, int p);

}  // namespace arapreg
