#include "arapreg/gradcheck.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <limits>

#include "arapreg/arap.hpp"
#include "arapreg/generator.hpp"
#include "arapreg/rng.hpp"
#include "arapreg/spectral.hpp"
#include "arapreg/synthetic.hpp"
#include "arapreg/trainer.hpp"

namespace arapreg {

namespace {

Mesh tetrahedron() {
  return Mesh::build({{0, 0, 0},
                      {1, 0, 0},
                      {0.5, std::sqrt(3.0) / 2.0, 0},
                      {0.5, std::sqrt(3.0) / 6.0, std::sqrt(2.0 / 3.0)}},
                     {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}});
}

Mesh cylinder20() {
  BendingBarSpec spec;
  spec.segments = 3;
  spec.ring_vertices = 5;
  spec.base_radius = 0.3;
  return bending_bar_mesh(spec, BarParameters{});
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
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

double rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-12);
}

// c^T dD(g) c as the Appendix quadratic form, weights carried.
double dd_quadratic_form(const Mesh& mesh, const VertexField& g, const VertexField& dg,
                         const VertexField& c) {
  double acc = 0.0;
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const Eigen::Vector3d ci = c.segment<3>(3 * i);
    for (const auto& [j, e] : mesh.neighbors[static_cast<size_t>(i)]) {
      const Eigen::Vector3d vij = g.segment<3>(3 * i) - g.segment<3>(3 * j);
      const Eigen::Vector3d dvij = dg.segment<3>(3 * i) - dg.segment<3>(3 * j);
      acc += 2.0 * mesh.edge_weight(e) *
             (vij.dot(dvij) * ci.squaredNorm() - ci.dot(dvij) * vij.dot(ci));
    }
  }
  return acc;
}

double d_block_form(const Mesh& mesh, const VertexField& g, const VertexField& c) {
  double acc = 0.0;
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const Eigen::Vector3d ci = c.segment<3>(3 * i);
    for (const auto& [j, e] : mesh.neighbors[static_cast<size_t>(i)]) {
      const Eigen::Vector3d vij = g.segment<3>(3 * i) - g.segment<3>(3 * j);
      acc += mesh.edge_weight(e) * (vij.squaredNorm() * ci.squaredNorm() - std::pow(vij.dot(ci), 2));
    }
  }
  return acc;
}

}  // namespace

std::vector<CheckResult> run_gradcheck(const GradcheckOptions& opts) {
  std::vector<CheckResult> results;
  auto record = [&](const std::string& name, double observed, double tol) {
    results.push_back({name, observed, tol, observed <= tol});
  };
  Rng rng(Rng::derive(opts.seed, 11));
  const int k = opts.latent_dim;

  const Mesh tet = tetrahedron();
  const Mesh cyl = cylinder20();

  // Taylor agreement: arap_energy(g, eps d) vs 1/2 eps^2 d^T H d
  {
    double worst = 0.0;
    for (const Mesh* mesh : {&tet, &cyl}) {
      const ArapHessian h = assemble_hessian(*mesh);
      for (int trial = 0; trial < 10; ++trial) {
        VertexField d = rng.normal_vector(3 * mesh->vertex_count());
        d /= d.norm();
        for (double eps : {1e-2, 1e-3}) {
          const double quad = 0.5 * eps * eps * d.dot(hessian_apply(h, d));
          const double energy = arap_energy(*mesh, eps * d);
          const double ratio = std::abs(energy - quad) / (quad + 1e-12) / (10.0 * eps);
          worst = std::max(worst, ratio);
        }
      }
    }
    record("arap_taylor", worst, 1.0);
  }

  // A-identity: A(g) a = -A(a) g
  {
    double worst = 0.0;
    for (const Mesh* mesh : {&tet, &cyl}) {
      const VertexField g = mesh->positions();
      for (int trial = 0; trial < 50; ++trial) {
        const VertexField a = rng.normal_vector(g.size());
        const VertexField lhs = a_apply(*mesh, g, a);
        const VertexField rhs = a_apply(*mesh, a, g);
        worst = std::max(worst, (lhs + rhs).norm() / std::max(1.0, lhs.norm()));
      }
    }
    record("a_identity", worst, 1e-12);
  }

  // dD quadratic form vs central differences of c^T D(g + t dg) c
  {
    double worst = 0.0;
    const double t = 1e-6;
    for (int trial = 0; trial < 10; ++trial) {
      const VertexField g = cyl.positions() + 0.1 * rng.normal_vector(3 * cyl.vertex_count());
      const VertexField dg = rng.normal_vector(g.size());
      const VertexField c = rng.normal_vector(g.size());
      const double fd =
          (d_block_form(cyl, g + t * dg, c) - d_block_form(cyl, g - t * dg, c)) / (2.0 * t);
      const double an = opts.dd_term_scale * dd_quadratic_form(cyl, g, dg, c);
      worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(fd), 1e-12));
    }
    record("dd_form", worst, 1e-5);
  }

  // Schur lemma vs brute-force minimization on a refined grid
  {
    const int p = 2, q = 2;
    Eigen::MatrixXd m(p + q, p + q);
    for (int r = 0; r < p + q; ++r)
      for (int c = 0; c < p + q; ++c) m(r, c) = rng.normal();
    m = (m * m.transpose()).eval();
    m += Eigen::MatrixXd::Identity(p + q, p + q);
    const Eigen::MatrixXd schur = schur_hessian(m, p);

    auto min_over_y = [&](const Eigen::VectorXd& x) {
      Eigen::VectorXd y = Eigen::VectorXd::Zero(q);
      double width = 4.0;
      double best = std::numeric_limits<double>::infinity();
      Eigen::VectorXd best_y = y;
      for (int pass = 0; pass < 40; ++pass) {
        for (int i0 = -4; i0 <= 4; ++i0)
          for (int i1 = -4; i1 <= 4; ++i1) {
            Eigen::VectorXd cand = y;
            cand[0] += width * i0 / 4.0;
            cand[1] += width * i1 / 4.0;
            Eigen::VectorXd full(p + q);
            full << x, cand;
            const double val = 0.5 * full.dot(m * full);
            if (val < best) {
              best = val;
              best_y = cand;
            }
          }
        y = best_y;
        width *= 0.5;
      }
      return best;
    };
    const double h = 1e-2;
    double worst = 0.0;
    for (int r = 0; r < p; ++r)
      for (int c = 0; c < p; ++c) {
        Eigen::VectorXd xpp = Eigen::VectorXd::Zero(p), xpm = xpp, xmp = xpp, xmm = xpp;
        xpp[r] += h; xpp[c] += h;
        xpm[r] += h; xpm[c] -= h;
        xmp[r] -= h; xmp[c] += h;
        xmm[r] -= h; xmm[c] -= h;
        const double fd =
            (min_over_y(xpp) - min_over_y(xpm) - min_over_y(xmp) + min_over_y(xmm)) / (4.0 * h * h);
        worst = std::max(worst, std::abs(fd - schur(r, c)));
      }
    record("schur_lemma", worst, 1e-4);
  }

  // Rodrigues linearization remainder at theta = 1e-3
  {
    Eigen::Vector3d axis = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
    const double theta = 1e-3;
    const Eigen::Matrix3d kx = cross_matrix(axis);
    const Eigen::Matrix3d exact = Eigen::Matrix3d::Identity() + std::sin(theta) * kx +
                                  (1.0 - std::cos(theta)) * kx * kx;
    const Eigen::Matrix3d approx =
        Eigen::Matrix3d::Identity() + theta * kx + 0.5 * (theta * kx) * (theta * kx);
    record("rodrigues", (exact - approx).norm(), theta * theta * theta);
  }

  // Eigenvalue differential (Eq. 13 lemma): d lambda = u^T dH u
  {
    const int dim = 8;
    Eigen::MatrixXd base(dim, dim), dh(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) {
        base(r, c) = rng.normal();
        dh(r, c) = rng.normal();
      }
    base = (0.5 * (base + base.transpose())).eval();
    base += Eigen::VectorXd::LinSpaced(dim, 0.0, 7.0).asDiagonal();  // spread the spectrum
    dh = (0.5 * (dh + dh.transpose())).eval();
    const double t = 1e-6;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(base), esp(base + t * dh), esm(base - t * dh);
    double worst = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double fd = (esp.eigenvalues()[i] - esm.eigenvalues()[i]) / (2.0 * t);
      const double an = es.eigenvectors().col(i).dot(dh * es.eigenvectors().col(i));
      worst = std::max(worst, std::abs(fd - an));
    }
    record("eig_gradient", worst, 1e-5);
  }

  // VJPs vs finite differences on an mlp
  {
    GeneratorParams p = make_mlp(k, {7}, 3 * cyl.vertex_count(), Rng::derive(opts.seed, 21));
    const Eigen::VectorXd z = rng.normal_vector(k);
    const VertexField cot = rng.normal_vector(p.output_dim);
    auto f_theta = [&](const Eigen::VectorXd& th) {
      GeneratorParams q = p;
      q.theta = th;
      return cot.dot(forward(q, z));
    };
    record("vjp_theta", rel_error(vjp_theta(p, z, cot), fd_gradient(f_theta, p.theta, 1e-6)), 1e-5);
    auto f_z = [&](const Eigen::VectorXd& zz) { return cot.dot(forward(p, zz)); };
    record("vjp_z", rel_error(vjp_z(p, z, cot), fd_gradient(f_z, z, 1e-6)), 1e-5);
  }

  // smoothness gradient vs finite differences
  {
    GeneratorParams p = make_mlp(k, {6}, 3 * tet.vertex_count(), Rng::derive(opts.seed, 22));
    const LatentBatch batch = draw_latent_batch(3, k, Rng::derive(opts.seed, 23));
    const auto res = smoothness_loss(p, batch, 0.1, 2);
    auto f = [&](const Eigen::VectorXd& th) {
      GeneratorParams q = p;
      q.theta = th;
      return smoothness_loss(q, batch, 0.1, 2).value;
    };
    record("smoothness_grad", rel_error(res.theta_gradient, fd_gradient(f, p.theta, 1e-6)), 1e-4);
  }

  // robust spectral gradient, linear generator on the tetrahedron
  {
    GeneratorParams p = make_linear(std::max(2, k), 3 * tet.vertex_count(),
                                    Rng::derive(opts.seed, 24), 0.3);
    p.theta.tail(p.output_dim) = tet.positions();
    const Eigen::VectorXd z = rng.normal_vector(p.latent_dim);
    TrainConfig cfg;
    cfg.latent_dim = p.latent_dim;
    cfg.n_z = 1;
    cfg.regularizer_mode = RegularizerMode::robust;
    cfg.lambda_r = 1.0;

    auto value_at = [&](const Eigen::VectorXd& th) {
      GeneratorParams q = p;
      q.theta = th;
      const VertexField g = forward(q, z);
      const auto spec = eigdecompose(reduce(assemble_hessian(tet, g), jacobian(q, z, cfg.s)));
      return robust_regularizer(spec, cfg.alpha);
    };
    const VertexField g = forward(p, z);
    const ArapHessian h = assemble_hessian(tet, g);
    const ReducedHessian red = reduce(h, jacobian(p, z, cfg.s));
    const Spectrum spec = eigdecompose(red);
    DirectionalJacobianVjp dj = [&](const Eigen::VectorXd& u, const VertexField& q) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(p.theta.size());
      for (int l = 0; l < p.latent_dim; ++l) {
        Eigen::VectorXd zp = z, zm = z;
        zp[l] += cfg.s;
        zm[l] -= cfg.s;
        acc += (u[l] / (2.0 * cfg.s)) * (vjp_theta(p, zp, q) - vjp_theta(p, zm, q));
      }
      return acc;
    };
    GeometryVjp dg = [&](const VertexField& cot) { return vjp_theta(p, z, cot); };
    RegularizerGradientOptions gopts;
    gopts.dd_term_scale = opts.dd_term_scale;
    const Eigen::VectorXd analytic =
        regularizer_gradient(spec, red, h, tet, cfg.alpha, dj, dg, gopts);
    record("robust_spectral_grad", rel_error(analytic, fd_gradient(value_at, p.theta, 1e-6)), 1e-4);
  }

  // full Eq. 8 loss gradient, mlp on the 20-vertex cylinder
  {
    GeneratorParams p = make_mlp(k, {10}, 3 * cyl.vertex_count(), Rng::derive(opts.seed, 25));
    TrainConfig cfg;
    cfg.latent_dim = k;
    cfg.n_z = 2;
    cfg.n_delta = 1;
    cfg.regularizer_mode = RegularizerMode::robust;
    const std::uint64_t loss_seed = Rng::derive(opts.seed, 26);
    auto loss_at = [&](const Eigen::VectorXd& th) {
      GeneratorParams q = p;
      q.theta = th;
      Rng r(loss_seed);
      return arapreg_loss(q, cyl, &cyl, cfg, r, opts.dd_term_scale).value;
    };
    Rng r(loss_seed);
    const auto res = arapreg_loss(p, cyl, &cyl, cfg, r, opts.dd_term_scale);
    record("arapreg_loss_grad", rel_error(res.gradient, fd_gradient(loss_at, p.theta, 1e-6)), 2e-3);
  }

  // ARAP-to-base baseline gradient, mlp
  {
    GeneratorParams p = make_mlp(k, {8}, 3 * tet.vertex_count(), Rng::derive(opts.seed, 27));
    TrainConfig cfg;
    cfg.latent_dim = k;
    cfg.n_z = 2;
    const std::uint64_t loss_seed = Rng::derive(opts.seed, 28);
    auto loss_at = [&](const Eigen::VectorXd& th) {
      GeneratorParams q = p;
      q.theta = th;
      Rng r(loss_seed);
      return arap_to_base_loss(q, tet, cfg, r).value;
    };
    Rng r(loss_seed);
    const auto res = arap_to_base_loss(p, tet, cfg, r);
    record("arap_to_base_grad", rel_error(res.gradient, fd_gradient(loss_at, p.theta, 1e-6)), 1e-3);
  }

  return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results)
    if (!r.pass) return false;
  return true;
}

}  // namespace arapreg
