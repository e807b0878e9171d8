#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>

#include "arapreg/synthetic.hpp"
#include "arapreg/trainer.hpp"
#include "oracles.hpp"

using namespace arapreg;

TEST_CASE("reconstruction_loss: identical fields, 3-4-5, FD cotangent") {
  Rng rng(1);
  const VertexField a = rng.normal_vector(12);
  const auto same = reconstruction_loss(a, a, ReconNorm::l1_vertex);
  CHECK(same.value == 0.0);
  CHECK(same.cotangent.norm() == 0.0);

  VertexField p(3), t(3);
  p << 3, 4, 0;
  t << 0, 0, 0;
  CHECK(reconstruction_loss(p, t, ReconNorm::l1_vertex).value == doctest::Approx(5.0));

  for (ReconNorm norm : {ReconNorm::l1_vertex, ReconNorm::l2}) {
    const VertexField pred = rng.normal_vector(12);
    const VertexField target = rng.normal_vector(12);
    const auto res = reconstruction_loss(pred, target, norm);
    auto f = [&](const Eigen::VectorXd& x) { return reconstruction_loss(x, target, norm).value; };
    CHECK(oracles::rel_error(res.cotangent, oracles::fd_gradient(f, pred, 1e-7)) <= 1e-6);
  }
}

TEST_CASE("reconstruction_loss: length mismatch") {
  CHECK_THROWS_AS(reconstruction_loss(VertexField::Zero(3), VertexField::Zero(6), ReconNorm::l2),
                  std::runtime_error);
}

TEST_CASE("kl_penalty: matched moments give zero") {
  Eigen::MatrixXd z(2, 3);
  z << 1, -1, 1, -1, 1, -1;  // population mean 0, variance 1 per dim
  CHECK(kl_penalty(z).value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("kl_penalty: collapsed latents hit the variance floor") {
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(5, 2);
  const double floor = 1e-6;
  const double per_dim = 0.5 * (floor - 1.0 - std::log(floor));
  CHECK(kl_penalty(z).value == doctest::Approx(2.0 * per_dim));
}

TEST_CASE("kl_penalty: large standard-normal sample is near zero") {
  Rng rng(7);
  Eigen::MatrixXd z(100000, 4);
  for (int i = 0; i < z.rows(); ++i)
    for (int j = 0; j < 4; ++j) z(i, j) = rng.normal();
  CHECK(kl_penalty(z).value <= 0.01);
}

TEST_CASE("kl_penalty: gradients match finite differences") {
  Rng rng(9);
  Eigen::MatrixXd z(6, 3);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 3; ++j) z(i, j) = 0.3 + rng.normal();
  const auto res = kl_penalty(z);
  for (int i = 0; i < 6; ++i) {
    auto f = [&](const Eigen::VectorXd& zi) {
      Eigen::MatrixXd zz = z;
      zz.row(i) = zi.transpose();
      return kl_penalty(zz).value;
    };
    const Eigen::VectorXd fd = oracles::fd_gradient(f, z.row(i).transpose(), 1e-6);
    CHECK(oracles::rel_error(res.gradients.row(i).transpose(), fd) <= 1e-6);
  }
  CHECK_THROWS_AS(kl_penalty(Eigen::MatrixXd::Zero(1, 3)), std::runtime_error);
}

TEST_CASE("adam: first step magnitude and zero-gradient fixpoint") {
  Adam opt;
  opt.init(3);
  Eigen::VectorXd params = Eigen::VectorXd::Zero(3);
  opt.step(params, Eigen::VectorXd::Ones(3), 0.1);
  // bias correction makes mhat/sqrt(vhat) = 1 up to epsilon-hat
  for (int i = 0; i < 3; ++i) CHECK(params[i] == doctest::Approx(-0.1).epsilon(1e-7));

  Adam opt2;
  opt2.init(3);
  Eigen::VectorXd frozen = Eigen::VectorXd::Constant(3, 0.5);
  opt2.step(frozen, Eigen::VectorXd::Zero(3), 0.1);
  CHECK((frozen - Eigen::VectorXd::Constant(3, 0.5)).norm() == 0.0);
}

TEST_CASE("adam: parameter groups update independently") {
  Rng rng(11);
  const Eigen::VectorXd g = rng.normal_vector(6);
  Adam joint;
  joint.init(6);
  Eigen::VectorXd both = Eigen::VectorXd::Zero(6);
  joint.step(both, g, 0.05);

  Adam a, b;
  a.init(3);
  b.init(3);
  Eigen::VectorXd first = Eigen::VectorXd::Zero(3), second = Eigen::VectorXd::Zero(3);
  a.step(first, g.head(3), 0.05);
  b.step(second, g.tail(3), 0.05);
  CHECK((both.head(3) - first).norm() == 0.0);
  CHECK((both.tail(3) - second).norm() == 0.0);
}

namespace {

std::vector<Mesh> tiny_bar_dataset(int count, std::uint64_t seed) {
  BendingBarSpec spec;
  spec.segments = 4;
  spec.ring_vertices = 5;
  spec.count = count;
  spec.seed = seed;
  Rng rng(seed);
  std::vector<Mesh> out;
  for (int i = 0; i < count; ++i) {
    BarParameters p;
    p.bend = rng.uniform_in(spec.bend_min, spec.bend_max);
    p.length_scale = rng.uniform_in(spec.length_min, spec.length_max);
    p.radius_scale = rng.uniform_in(spec.radius_min, spec.radius_max);
    out.push_back(bending_bar_mesh(spec, p));
  }
  return out;
}

}  // namespace

TEST_CASE("train_auto_decoder: single mesh, linear generator, reconstruction to zero") {
  const std::vector<Mesh> dataset = {oracles::tetrahedron()};
  TrainConfig cfg;
  cfg.generator_kind = "linear";
  cfg.latent_dim = 2;
  cfg.regularizer_mode = RegularizerMode::none;
  cfg.lambda_reg = 0.0;
  cfg.lambda_kl = 0.0;  // kl needs >= 2 latents
  cfg.alternating_iters = 200;
  cfg.seed = 5;
  cfg.recon_norm = ReconNorm::l2;  // smooth objective: Adam settles exactly
  const TrainState st = train_auto_decoder(dataset, cfg);
  CHECK(st.history.back().recon <= 1e-6);
}

TEST_CASE("train_auto_decoder: connectivity mismatch rejected") {
  std::vector<Mesh> dataset = tiny_bar_dataset(2, 3);
  dataset.push_back(oracles::tetrahedron());
  TrainConfig cfg;
  CHECK_THROWS_WITH_AS(train_auto_decoder(dataset, cfg), doctest::Contains("connectivity"),
                       std::runtime_error);
}

TEST_CASE("train_auto_decoder: deterministic histories and phase separation") {
  const std::vector<Mesh> dataset = tiny_bar_dataset(3, 7);
  TrainConfig cfg;
  cfg.latent_dim = 2;
  cfg.hidden = {6};
  cfg.alternating_iters = 3;
  cfg.n_z = 1;
  cfg.seed = 11;
  const TrainState a = train_auto_decoder(dataset, cfg);
  const TrainState b = train_auto_decoder(dataset, cfg);
  REQUIRE(a.history.size() == b.history.size());
  for (size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].total == b.history[i].total);
    CHECK(a.history[i].recon == b.history[i].recon);
  }
  CHECK((a.params.theta - b.params.theta).norm() == 0.0);
  CHECK((a.latents - b.latents).norm() == 0.0);
}

TEST_CASE("term isolation: lambda_reg = 0 equals smoothness-free run bitwise") {
  const std::vector<Mesh> dataset = tiny_bar_dataset(3, 13);
  TrainConfig with_mode_none;
  with_mode_none.latent_dim = 2;
  with_mode_none.hidden = {6};
  with_mode_none.alternating_iters = 2;
  with_mode_none.seed = 17;
  with_mode_none.lambda_reg = 0.0;
  with_mode_none.regularizer_mode = RegularizerMode::robust;

  TrainConfig zeroed = with_mode_none;
  zeroed.regularizer_mode = RegularizerMode::none;
  // lambda_reg = 0 skips the whole L_reg path, so the mode cannot matter
  const TrainState a = train_auto_decoder(dataset, with_mode_none);
  const TrainState b = train_auto_decoder(dataset, zeroed);
  CHECK((a.params.theta - b.params.theta).norm() == 0.0);
  CHECK(a.history.back().spectral == 0.0);
  CHECK(a.history.back().smooth == 0.0);
}

TEST_CASE("arapreg_loss: lambda_r = 0 reduces to the smoothness term") {
  const Mesh mesh = oracles::tetrahedron();
  GeneratorParams p = make_mlp(2, {5}, 12, 19);
  TrainConfig cfg;
  cfg.latent_dim = 2;
  cfg.n_z = 2;
  cfg.lambda_r = 0.0;
  cfg.regularizer_mode = RegularizerMode::robust;
  Rng rng_a(3), rng_b(3);
  const auto full = arapreg_loss(p, mesh, &mesh, cfg, rng_a);
  CHECK(full.value == full.smoothness);

  TrainConfig none = cfg;
  none.regularizer_mode = RegularizerMode::none;
  const auto only_smooth = arapreg_loss(p, mesh, &mesh, none, rng_b);
  CHECK(full.smoothness == only_smooth.smoothness);
}

TEST_CASE("arapreg_loss: translation-column linear generator has zero loss") {
  const Mesh mesh = oracles::tetrahedron();
  GeneratorParams p = make_linear(3, 12, 0, 0.0);
  p.theta.tail(12) = mesh.positions();
  // W columns = translation fields
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w(
      p.theta.data(), 12, 3);
  for (int i = 0; i < 4; ++i) w.block<3, 3>(3 * i, 0).setIdentity();
  TrainConfig cfg;
  cfg.latent_dim = 3;
  cfg.n_z = 2;
  cfg.regularizer_mode = RegularizerMode::robust;
  Rng rng(5);
  const auto res = arapreg_loss(p, mesh, &mesh, cfg, rng);
  CHECK(res.smoothness <= 1e-24);
  CHECK(res.spectral <= 1e-9);
}

TEST_CASE("arap_to_base_loss: base-reproducing and rotated generators carry none") {
  const Mesh base = oracles::cylinder20();
  const int n3 = 3 * base.vertex_count();
  GeneratorParams constant = make_linear(2, n3, 0, 0.0);
  constant.theta.tail(n3) = base.positions();
  TrainConfig cfg;
  cfg.latent_dim = 2;
  cfg.n_z = 2;
  Rng rng(7);
  CHECK(arap_to_base_loss(constant, base, cfg, rng).value <= 1e-20);

  const Eigen::Matrix3d r = oracles::rotation_about({0.2, 1.0, -0.4}, 0.8);
  GeneratorParams rotated = constant;
  for (int i = 0; i < base.vertex_count(); ++i)
    rotated.theta.segment<3>(2 * n3 + 3 * i).applyOnTheLeft(r);
  Rng rng2(7);
  CHECK(arap_to_base_loss(rotated, base, cfg, rng2).value <= 1e-10);
}

TEST_CASE("refine_latent: realizable target reaches machine-level error") {
  const Mesh mesh = oracles::tetrahedron();
  GeneratorParams p = make_linear(2, 12, 23, 0.5);
  p.theta.tail(12) = mesh.positions();
  Rng rng(9);
  const Eigen::VectorXd z_star = rng.normal_vector(2);
  const VertexField target = forward(p, z_star);
  TrainConfig cfg;
  cfg.latent_dim = 2;
  cfg.refine_iters = 4000;
  cfg.recon_norm = ReconNorm::l2;
  const Eigen::VectorXd z = refine_latent(p, target, cfg);
  CHECK(reconstruction_loss(forward(p, z), target, ReconNorm::l2).value <= 1e-10);
}

TEST_CASE("refine_latent: unreachable target matches the least-squares oracle") {
  GeneratorParams p = make_linear(2, 12, 29, 0.8);
  Rng rng(11);
  p.theta.tail(12) = rng.normal_vector(12);
  const VertexField target = rng.normal_vector(12);
  TrainConfig cfg;
  cfg.latent_dim = 2;
  cfg.refine_iters = 6000;
  cfg.recon_norm = ReconNorm::l2;
  const Eigen::VectorXd z = refine_latent(p, target, cfg);
  const double achieved = reconstruction_loss(forward(p, z), target, ReconNorm::l2).value;

  // normal equations for min_z |g0 + W z - target|^2
  const Eigen::MatrixXd w = p.linear_w();
  const Eigen::VectorXd rhs = target - p.linear_g0();
  const Eigen::VectorXd z_opt = (w.transpose() * w).ldlt().solve(w.transpose() * rhs);
  const double optimal = (w * z_opt - rhs).squaredNorm() / 12.0;
  CHECK(achieved == doctest::Approx(optimal).epsilon(1e-6));
}

TEST_CASE("refine_latent: zero-iteration budget returns the zero vector") {
  GeneratorParams p = make_linear(3, 12, 31, 0.5);
  TrainConfig cfg;
  cfg.latent_dim = 3;
  cfg.refine_iters = 0;
  CHECK(refine_latent(p, VertexField::Ones(12), cfg).norm() == 0.0);
}

TEST_CASE("training loss is mostly non-increasing") {
  int good = 0, total = 0;
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
    const std::vector<Mesh> dataset = tiny_bar_dataset(8, 100 + seed);
    TrainConfig cfg;
    cfg.latent_dim = 2;
    cfg.hidden = {8};
    cfg.alternating_iters = 12;
    cfg.n_z = 4;
    cfg.seed = seed;
    cfg.regularizer_mode = RegularizerMode::robust;
    const TrainState st = train_auto_decoder(dataset, cfg);
    for (size_t i = 1; i < st.history.size(); ++i) {
      ++total;
      if (st.history[i].total <= st.history[i - 1].total * (1.0 + 1e-9)) ++good;
    }
  }
  CHECK(static_cast<double>(good) / total >= 0.9);
}
