#pragma once

#include <functional>

#include <Eigen/Core>

#include "arapreg/arap.hpp"
#include "arapreg/mesh.hpp"

namespace arapreg {

// H-bar = J^T H J pulled back to the k-dimensional latent tangent space.
struct ReducedHessian {
  Eigen::MatrixXd matrix;    // k x k, symmetric
  Eigen::MatrixXd jacobian;  // 3n x k, the J used to build it
};

// k matrix-free Hessian products, one per Jacobian column, then symmetrized.
ReducedHessian reduce(const ArapHessian& h, const Eigen::MatrixXd& jacobian);

struct Spectrum {
  Eigen::VectorXd eigenvalues;   // ascending, clamped at 0
  Eigen::MatrixXd eigenvectors;  // orthonormal columns
};

// Full symmetric eigendecomposition with a deterministic sign convention
// (largest-magnitude component of each eigenvector made positive).
// Eigenvalues below -1e-8 * max(1, |lambda_max|) are an error; smaller
// negatives are clamped to 0.
Spectrum eigdecompose(const ReducedHessian& r);

// Tr(H-bar): the sphere-averaged rigidity potential (L2 form).
double l2_regularizer(const ReducedHessian& r);

// sum_i lambda_i^alpha. alpha = 1 reproduces the trace exactly.
double robust_regularizer(const Spectrum& s, double alpha);

// Maps an eigenvector direction u and an output-space cotangent to a
// parameter gradient of (dJ u)^T cotangent; the trainer wires this to the
// differential of whatever estimator built J.
using DirectionalJacobianVjp =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& direction, const VertexField& cotangent)>;
// Maps a cotangent on the generated vertices to a parameter gradient.
using GeometryVjp = std::function<Eigen::VectorXd(const VertexField& cotangent)>;

struct RegularizerGradientOptions {
  double eig_floor_coeff = 1e-8;  // floor = coeff * max(1, lambda_max)
  double dd_term_scale = 1.0;     // fault-injection hook for gradcheck
};

// Parameter gradient of robust_regularizer via the eigenvalue differential
// d lambda_i = u_i^T d(H-bar) u_i, with each term routed through the
// generator VJPs:
//   u^T dHbar u = 2 (H J u)^T (dJ u)                    [through dj_vjp]
//               + 4 c^T A(Ju) dg + 2 c^T dD c,  c = D^-1 A J u   [through dg_vjp]
// Eigenvalues are floored inside lambda^(alpha-1) only.
Eigen::VectorXd regularizer_gradient(const Spectrum& s, const ReducedHessian& r,
                                     const ArapHessian& h, const Mesh& mesh, double alpha,
                                     const DirectionalJacobianVjp& dj_vjp,
                                     const GeometryVjp& dg_vjp,
                                     const RegularizerGradientOptions& opts = {});

// Central-difference directional derivative (g(z + s dir) - g(z - s dir)) / (2s).
// Exact for linear maps, O(s^2) bias otherwise.
VertexField directional_jacobian(const std::function<VertexField(const Eigen::VectorXd&)>& gen_eval,
                                 const Eigen::VectorXd& z, const Eigen::VectorXd& dir, double s);

}  // namespace arapreg
