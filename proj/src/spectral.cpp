#include "arapreg/spectral.hpp"

#include <Eigen/Geometry>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>

namespace arapreg {

ReducedHessian reduce(const ArapHessian& h, const Eigen::MatrixXd& jacobian) {
  if (jacobian.rows() != 3 * h.n)
    throw std::runtime_error("reduce: jacobian has " + std::to_string(jacobian.rows()) +
                             " rows, expected " + std::to_string(3 * h.n));
  const int k = static_cast<int>(jacobian.cols());
  Eigen::MatrixXd hj(3 * h.n, k);
  for (int c = 0; c < k; ++c) hj.col(c) = hessian_apply(h, jacobian.col(c));
  Eigen::MatrixXd m = jacobian.transpose() * hj;
  ReducedHessian out;
  out.matrix = 0.5 * (m + m.transpose());
  out.jacobian = jacobian;
  return out;
}

Spectrum eigdecompose(const ReducedHessian& r) {
  const int k = static_cast<int>(r.matrix.rows());
  if (k > 512) throw std::runtime_error("eigdecompose: k capped at 512");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.matrix);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigdecompose: eigen iteration did not converge");

  Spectrum s;
  s.eigenvalues = es.eigenvalues();
  s.eigenvectors = es.eigenvectors();

  const double scale = std::max(1.0, std::abs(s.eigenvalues[k - 1]));
  for (int i = 0; i < k; ++i) {
    if (s.eigenvalues[i] < -1e-8 * scale)
      throw std::runtime_error("eigdecompose: negative eigenvalue " +
                               std::to_string(s.eigenvalues[i]) + " beyond tolerance");
    if (s.eigenvalues[i] < 0.0) s.eigenvalues[i] = 0.0;
    // sign convention: largest-magnitude component positive
    int arg = 0;
    s.eigenvectors.col(i).cwiseAbs().maxCoeff(&arg);
    if (s.eigenvectors(arg, i) < 0.0) s.eigenvectors.col(i) *= -1.0;
  }
  return s;
}

double l2_regularizer(const ReducedHessian& r) { return r.matrix.trace(); }

double robust_regularizer(const Spectrum& s, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::runtime_error("robust_regularizer: alpha must be in (0,1]");
  double total = 0.0;
  for (int i = 0; i < s.eigenvalues.size(); ++i) {
    const double lam = s.eigenvalues[i];
    if (lam < 0.0) throw std::runtime_error("robust_regularizer: negative eigenvalue");
    total += (alpha == 1.0) ? lam : std::pow(lam, alpha);
  }
  return total;
}

Eigen::VectorXd regularizer_gradient(const Spectrum& s, const ReducedHessian& r,
                                     const ArapHessian& h, const Mesh& mesh, double alpha,
                                     const DirectionalJacobianVjp& dj_vjp,
                                     const GeometryVjp& dg_vjp,
                                     const RegularizerGradientOptions& opts) {
  const int k = static_cast<int>(r.matrix.rows());
  const int n = h.n;
  if (s.eigenvalues.size() != k) throw std::runtime_error("regularizer_gradient: spectrum/reduced mismatch");
  const double lam_max = k > 0 ? s.eigenvalues[k - 1] : 0.0;
  const double floor = opts.eig_floor_coeff * std::max(1.0, lam_max);

  Eigen::VectorXd grad;
  for (int i = 0; i < k; ++i) {
    const double lam = std::max(s.eigenvalues[i], floor);
    const double weight = alpha * std::pow(lam, alpha - 1.0);
    const Eigen::VectorXd u = s.eigenvectors.col(i);
    const VertexField y = r.jacobian * u;

    // (a) 2 (H y)^T (dJ u)
    const VertexField hy = hessian_apply(h, y);
    Eigen::VectorXd term = dj_vjp(u, 2.0 * hy);
    if (grad.size() == 0) grad = Eigen::VectorXd::Zero(term.size());
    grad += weight * term;

    // c = D^-1 A y
    VertexField c = h.a_blocks * y;
    for (int v = 0; v < n; ++v)
      c.segment<3>(3 * v) = h.d_inv_blocks[static_cast<size_t>(v)] * c.segment<3>(3 * v);

    // (b)+(c): y^T dH y = 4 c^T A(y) dg + 2 c^T dD c, accumulated edge-wise
    // as a cotangent field on dg.
    VertexField psi = VertexField::Zero(3 * n);
    for (int vi = 0; vi < n; ++vi) {
      const Eigen::Vector3d ci = c.segment<3>(3 * vi);
      const Eigen::Vector3d gi = h.rest.segment<3>(3 * vi);
      const Eigen::Vector3d yi = y.segment<3>(3 * vi);
      for (const auto& [vj, e] : mesh.neighbors[static_cast<size_t>(vi)]) {
        const double w = mesh.edge_weight(e);
        const Eigen::Vector3d yij = yi - y.segment<3>(3 * vj);
        const Eigen::Vector3d vij = gi - Eigen::Vector3d(h.rest.segment<3>(3 * vj));
        // dA term: 4 w c_i . (y_ij x dg_ij) = 4 w dg_ij . (c_i x y_ij)
        const Eigen::Vector3d from_da = 4.0 * w * ci.cross(yij);
        // dD term: 2 * w * 2 [ (v_ij . dg_ij) |c_i|^2 - (c_i . dg_ij)(v_ij . c_i) ]
        const Eigen::Vector3d from_dd =
            opts.dd_term_scale * 4.0 * w * (ci.squaredNorm() * vij - vij.dot(ci) * ci);
        const Eigen::Vector3d contrib = from_da + from_dd;
        psi.segment<3>(3 * vi) += contrib;
        psi.segment<3>(3 * vj) -= contrib;
      }
    }
    grad += weight * dg_vjp(psi);
  }
  return grad;
}

VertexField directional_jacobian(const std::function<VertexField(const Eigen::VectorXd&)>& gen_eval,
                                 const Eigen::VectorXd& z, const Eigen::VectorXd& dir, double s) {
  if (!(s > 0.0)) throw std::runtime_error("directional_jacobian: step must be positive");
  return (gen_eval(z + s * dir) - gen_eval(z - s * dir)) / (2.0 * s);
}

}  // namespace arapreg
