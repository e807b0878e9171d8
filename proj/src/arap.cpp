#include "arapreg/arap.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <stdexcept>
#include <string>

namespace arapreg {

namespace {

void check_field(const Mesh& mesh, const VertexField& x, const char* what) {
  if (x.size() != 3 * mesh.vertex_count())
    throw std::runtime_error(std::string(what) + ": field length " + std::to_string(x.size()) +
                             " does not match 3n = " + std::to_string(3 * mesh.vertex_count()));
}

}  // namespace

RotationSet fit_rotations(const Mesh& mesh, const VertexField& x) {
  return fit_rotations(mesh, mesh.positions(), x);
}

RotationSet fit_rotations(const Mesh& mesh, const VertexField& rest, const VertexField& x) {
  check_field(mesh, x, "fit_rotations");
  check_field(mesh, rest, "fit_rotations");
  const int n = mesh.vertex_count();
  RotationSet out;
  out.rotations.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
    for (const auto& [j, e] : mesh.neighbors[static_cast<size_t>(i)]) {
      const Eigen::Vector3d v = field_vertex(rest, i) - field_vertex(rest, j);
      const Eigen::Vector3d xij = field_vertex(x, i) - field_vertex(x, j);
      s += mesh.edge_weight(e) * v * (v + xij).transpose();
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(s, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d u = svd.matrixU();
    const Eigen::Matrix3d& v = svd.matrixV();
    if ((v * u.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
    out.rotations[static_cast<size_t>(i)] = v * u.transpose();
  }
  return out;
}

double arap_energy(const Mesh& mesh, const VertexField& x) {
  return arap_energy(mesh, mesh.positions(), x);
}

double arap_energy(const Mesh& mesh, const VertexField& rest, const VertexField& x) {
  const RotationSet rot = fit_rotations(mesh, rest, x);
  double energy = 0.0;
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const Eigen::Matrix3d oi = rot.rotations[static_cast<size_t>(i)] - Eigen::Matrix3d::Identity();
    for (const auto& [j, e] : mesh.neighbors[static_cast<size_t>(i)]) {
      const Eigen::Vector3d v = field_vertex(rest, i) - field_vertex(rest, j);
      const Eigen::Vector3d xij = field_vertex(x, i) - field_vertex(x, j);
      energy += mesh.edge_weight(e) * (oi * v - xij).squaredNorm();
    }
  }
  return energy;
}

VertexField arap_energy_gradient(const Mesh& mesh, const VertexField& rest, const VertexField& x) {
  const RotationSet rot = fit_rotations(mesh, rest, x);
  VertexField grad = VertexField::Zero(x.size());
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const Eigen::Matrix3d oi = rot.rotations[static_cast<size_t>(i)] - Eigen::Matrix3d::Identity();
    for (const auto& [j, e] : mesh.neighbors[static_cast<size_t>(i)]) {
      const Eigen::Vector3d v = field_vertex(rest, i) - field_vertex(rest, j);
      const Eigen::Vector3d xij = field_vertex(x, i) - field_vertex(x, j);
      const Eigen::Vector3d r = 2.0 * mesh.edge_weight(e) * (oi * v - xij);
      grad.segment<3>(3 * i) -= r;
      grad.segment<3>(3 * j) += r;
    }
  }
  return grad;
}

ArapHessian assemble_hessian(const Mesh& mesh) {
  return assemble_hessian(mesh, mesh.positions());
}

ArapHessian assemble_hessian(const Mesh& mesh, const VertexField& rest) {
  check_field(mesh, rest, "assemble_hessian");
  const int n = mesh.vertex_count();
  ArapHessian h;
  h.n = n;
  h.rest = rest;
  h.laplacian = graph_laplacian(mesh);
  h.d_inv_blocks.resize(static_cast<size_t>(n));
  h.reg_epsilon.assign(static_cast<size_t>(n), 0.0);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(9 * (static_cast<size_t>(n) + 2 * mesh.edges.size()));
  auto add_block = [&](int bi, int bj, const Eigen::Matrix3d& blk) {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        if (blk(r, c) != 0.0) trips.emplace_back(3 * bi + r, 3 * bj + c, blk(r, c));
  };

  for (int i = 0; i < n; ++i) {
    if (mesh.neighbors[static_cast<size_t>(i)].empty())
      throw std::runtime_error("assemble_hessian: vertex " + std::to_string(i) + " is isolated");
    Eigen::Matrix3d diag = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d d = Eigen::Matrix3d::Zero();
    for (const auto& [j, e] : mesh.neighbors[static_cast<size_t>(i)]) {
      const double w = mesh.edge_weight(e);
      const Eigen::Vector3d v = field_vertex(rest, i) - field_vertex(rest, j);
      const Eigen::Matrix3d vx = cross_matrix(v);
      diag += w * vx;
      add_block(i, j, -w * vx);
      d += w * (v.squaredNorm() * Eigen::Matrix3d::Identity() - v * v.transpose());
    }
    add_block(i, i, diag);

    // Regularize near-singular neighborhoods (e.g. all neighbors collinear)
    // with a relative Tikhonov shift before inversion.
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(d);
    const double tr = d.trace();
    if (es.eigenvalues()[0] < 1e-9 * tr) {
      const double eps = 1e-9 * tr;
      h.reg_epsilon[static_cast<size_t>(i)] = eps;
      d += eps * Eigen::Matrix3d::Identity();
    }
    h.d_inv_blocks[static_cast<size_t>(i)] = d.inverse();
  }

  Eigen::SparseMatrix<double> a(3 * n, 3 * n);
  a.setFromTriplets(trips.begin(), trips.end());
  h.a_blocks = std::move(a);
  return h;
}

VertexField hessian_apply(const ArapHessian& h, const VertexField& x) {
  if (x.size() != 3 * h.n) throw std::runtime_error("hessian_apply: field length mismatch");
  // (L (x) I3) x
  VertexField lx = VertexField::Zero(x.size());
  for (int col = 0; col < h.laplacian.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(h.laplacian, col); it; ++it)
      lx.segment<3>(3 * static_cast<int>(it.row())) += it.value() * x.segment<3>(3 * col);

  VertexField ax = h.a_blocks * x;
  for (int i = 0; i < h.n; ++i)
    ax.segment<3>(3 * i) = h.d_inv_blocks[static_cast<size_t>(i)] * ax.segment<3>(3 * i);
  VertexField atdax = h.a_blocks.transpose() * ax;

  return 4.0 * lx - 2.0 * atdax;
}

Eigen::MatrixXd hessian_dense(const ArapHessian& h) {
  const int n3 = 3 * h.n;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n3, n3);
  Eigen::MatrixXd l = Eigen::MatrixXd(h.laplacian);
  for (int i = 0; i < h.n; ++i)
    for (int j = 0; j < h.n; ++j)
      if (l(i, j) != 0.0) out.block<3, 3>(3 * i, 3 * j) = 4.0 * l(i, j) * Eigen::Matrix3d::Identity();
  Eigen::MatrixXd a = Eigen::MatrixXd(h.a_blocks);
  Eigen::MatrixXd dinv_a = a;
  for (int i = 0; i < h.n; ++i)
    dinv_a.middleRows(3 * i, 3) = h.d_inv_blocks[static_cast<size_t>(i)] * a.middleRows(3 * i, 3);
  out -= 2.0 * a.transpose() * dinv_a;
  return out;
}

VertexField a_apply(const Mesh& mesh, const VertexField& rest, const VertexField& x) {
  check_field(mesh, x, "a_apply");
  check_field(mesh, rest, "a_apply");
  VertexField out = VertexField::Zero(x.size());
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    for (const auto& [j, e] : mesh.neighbors[static_cast<size_t>(i)]) {
      const Eigen::Vector3d v = field_vertex(rest, i) - field_vertex(rest, j);
      acc += mesh.edge_weight(e) * v.cross(field_vertex(x, i) - field_vertex(x, j));
    }
    out.segment<3>(3 * i) = acc;
  }
  return out;
}

std::vector<VertexField> rigid_fields(const VertexField& rest) {
  const int n = static_cast<int>(rest.size() / 3);
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i) centroid += rest.segment<3>(3 * i);
  centroid /= n;

  std::vector<VertexField> fields;
  for (int axis = 0; axis < 3; ++axis) {
    VertexField t = VertexField::Zero(3 * n);
    for (int i = 0; i < n; ++i) t[3 * i + axis] = 1.0;
    fields.push_back(t / t.norm());
  }
  for (int axis = 0; axis < 3; ++axis) {
    const Eigen::Vector3d c = Eigen::Vector3d::Unit(axis);
    VertexField r(3 * n);
    for (int i = 0; i < n; ++i) r.segment<3>(3 * i) = c.cross(Eigen::Vector3d(rest.segment<3>(3 * i)) - centroid);
    const double nrm = r.norm();
    fields.push_back(nrm > 0 ? VertexField(r / nrm) : r);
  }
  return fields;
}

NullSpaceReport null_space_report(const ArapHessian& h, const Mesh& mesh) {
  if (h.n > 200) throw std::runtime_error("null_space_report: dense eigensolve capped at n <= 200");
  (void)mesh;
  const Eigen::MatrixXd dense = hessian_dense(h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
  if (es.info() != Eigen::Success) throw std::runtime_error("null_space_report: eigensolve failed");

  NullSpaceReport rep;
  rep.max_eigenvalue = es.eigenvalues().maxCoeff();
  const double cut = 1e-8 * rep.max_eigenvalue;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] < cut) ++rep.kernel_count;

  const auto fields = rigid_fields(h.rest);
  for (int a = 0; a < 3; ++a) {
    rep.translation_residuals[static_cast<size_t>(a)] = hessian_apply(h, fields[static_cast<size_t>(a)]).norm();
    rep.rotation_residuals[static_cast<size_t>(a)] = hessian_apply(h, fields[static_cast<size_t>(a + 3)]).norm();
  }
  return rep;
}

Eigen::MatrixXd schur_hessian(const Eigen::MatrixXd& m, int p) {
  if (m.rows() != m.cols()) throw std::runtime_error("schur_hessian: matrix must be square");
  const int q = static_cast<int>(m.rows()) - p;
  if (p <= 0 || q <= 0) throw std::runtime_error("schur_hessian: invalid partition");
  const Eigen::MatrixXd myy = m.bottomRightCorner(q, q);
  Eigen::LLT<Eigen::MatrixXd> llt(myy);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("schur_hessian: lower-right block is not positive definite");
  const Eigen::MatrixXd mxy = m.topRightCorner(p, q);
  return m.topLeftCorner(p, p) - mxy * llt.solve(mxy.transpose());
}

}  // namespace arapreg
