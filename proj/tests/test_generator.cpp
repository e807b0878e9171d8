#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "arapreg/generator.hpp"
#include "arapreg/rng.hpp"
#include "arapreg/trainer.hpp"
#include "oracles.hpp"

using namespace arapreg;

TEST_CASE("linear forward: W = 0 returns g0; basis latents pick columns") {
  GeneratorParams p = make_linear(3, 9, 0, 0.0);
  Rng rng(1);
  const Eigen::VectorXd g0 = rng.normal_vector(9);
  p.theta.tail(9) = g0;
  CHECK((forward(p, rng.normal_vector(3)) - g0).norm() == 0.0);

  GeneratorParams q = make_linear(3, 9, 7, 0.5);
  const Eigen::VectorXd e1 = Eigen::Vector3d(1, 0, 0);
  const VertexField out = forward(q, e1);
  const Eigen::MatrixXd w = q.linear_w();
  CHECK((out - (Eigen::VectorXd(q.linear_g0()) + w.col(0))).norm() <= 1e-15);
}

TEST_CASE("mlp with zero parameters outputs zero") {
  GeneratorParams p = make_mlp(2, {5}, 9, 0);
  p.theta.setZero();
  CHECK(forward(p, Eigen::Vector2d(0.3, -0.7)).norm() == 0.0);
}

TEST_CASE("forward is deterministic") {
  GeneratorParams p = make_mlp(3, {6, 5}, 12, 42);
  Rng rng(2);
  const Eigen::VectorXd z = rng.normal_vector(3);
  const VertexField a = forward(p, z);
  const VertexField b = forward(p, z);
  CHECK((a - b).norm() == 0.0);
}

TEST_CASE("latent dimension >= 1 is enforced") {
  CHECK_THROWS_AS(make_linear(0, 9, 0), std::runtime_error);
  CHECK_THROWS_AS(make_mlp(0, {4}, 9, 0), std::runtime_error);
}

TEST_CASE("vjp_theta: linear closed form") {
  GeneratorParams p = make_linear(3, 9, 11, 0.3);
  Rng rng(3);
  const Eigen::VectorXd z = rng.normal_vector(3);
  const VertexField cot = rng.normal_vector(9);
  const Eigen::VectorXd grad = vjp_theta(p, z, cot);
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 3; ++c) CHECK(grad[r * 3 + c] == doctest::Approx(cot[r] * z[c]));
  CHECK((grad.tail(9) - cot).norm() == 0.0);
  CHECK(vjp_theta(p, z, VertexField::Zero(9)).norm() == 0.0);
}

TEST_CASE("vjp_z: linear closed form and zero cotangent") {
  GeneratorParams p = make_linear(3, 9, 13, 0.3);
  Rng rng(4);
  const Eigen::VectorXd z = rng.normal_vector(3);
  const VertexField cot = rng.normal_vector(9);
  const Eigen::MatrixXd w = p.linear_w();
  CHECK((vjp_z(p, z, cot) - w.transpose() * cot).norm() <= 1e-15);
  CHECK(vjp_z(p, z, VertexField::Zero(9)).norm() == 0.0);
}

TEST_CASE("mlp VJPs match finite differences") {
  GeneratorParams p = make_mlp(3, {7, 6}, 12, 17);
  Rng rng(5);
  const Eigen::VectorXd z = rng.normal_vector(3);
  const VertexField cot = rng.normal_vector(12);

  auto f_theta = [&](const Eigen::VectorXd& th) {
    GeneratorParams q = p;
    q.theta = th;
    return cot.dot(forward(q, z));
  };
  CHECK(oracles::rel_error(vjp_theta(p, z, cot), oracles::fd_gradient(f_theta, p.theta, 1e-6)) <=
        1e-5);

  auto f_z = [&](const Eigen::VectorXd& zz) { return cot.dot(forward(p, zz)); };
  CHECK(oracles::rel_error(vjp_z(p, z, cot), oracles::fd_gradient(f_z, z, 1e-6)) <= 1e-5);
}

TEST_CASE("jvp agrees with vjp through random pairings") {
  GeneratorParams p = make_mlp(4, {6}, 9, 23);
  Rng rng(6);
  const Eigen::VectorXd z = rng.normal_vector(4);
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd dz = rng.normal_vector(4);
    const VertexField cot = rng.normal_vector(9);
    // cot . (J dz) must equal (J^T cot) . dz
    CHECK(cot.dot(jvp(p, z, dz)) == doctest::Approx(vjp_z(p, z, cot).dot(dz)).epsilon(1e-12));
  }
}

TEST_CASE("jacobian: exact for linear, forward-mode match for mlp") {
  GeneratorParams lin = make_linear(3, 9, 29, 0.4);
  const Eigen::MatrixXd w = lin.linear_w();
  CHECK((jacobian(lin, Eigen::Vector3d(1, 2, 3), 0.05) - w).norm() == 0.0);

  GeneratorParams p = make_mlp(3, {8}, 12, 31);
  Rng rng(7);
  const Eigen::VectorXd z = rng.normal_vector(3);
  const Eigen::MatrixXd j = jacobian(p, z, 1e-4);
  for (int c = 0; c < 3; ++c) {
    const VertexField an = jvp(p, z, Eigen::Vector3d::Unit(c));
    CHECK((j.col(c) - an).norm() <= 1e-5 * std::max(1.0, an.norm()));
  }
}

TEST_CASE("smoothness_loss: linear generators carry none") {
  GeneratorParams p = make_linear(3, 12, 37, 0.8);
  const LatentBatch batch = draw_latent_batch(4, 3, 5);
  const auto res = smoothness_loss(p, batch, 0.1, 2);
  CHECK(res.value <= 1e-24);
  CHECK(res.theta_gradient.norm() <= 1e-10);
}

TEST_CASE("smoothness value on the quadratic test generator") {
  // g(z) = z^2 v at z = 0 with a single delta d: second difference is
  // exactly 2 d^2 v, so the loss is 4 d^4 |v|^2
  Rng rng(8);
  const Eigen::VectorXd v = rng.normal_vector(9);
  auto quad = [&](const Eigen::VectorXd& z) -> VertexField { return z[0] * z[0] * v; };
  const double d = 0.3;
  Eigen::MatrixXd latents = Eigen::MatrixXd::Zero(1, 1);
  Eigen::MatrixXd deltas(1, 1);
  deltas << d;
  const double expected = 4.0 * std::pow(d, 4) * v.squaredNorm();
  CHECK(smoothness_value(quad, latents, deltas) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("smoothness gradient matches finite differences") {
  GeneratorParams p = make_mlp(3, {6}, 9, 41);
  const LatentBatch batch = draw_latent_batch(3, 3, 9);
  const auto res = smoothness_loss(p, batch, 0.1, 1);
  auto f = [&](const Eigen::VectorXd& th) {
    GeneratorParams q = p;
    q.theta = th;
    return smoothness_loss(q, batch, 0.1, 1).value;
  };
  CHECK(oracles::rel_error(res.theta_gradient, oracles::fd_gradient(f, p.theta, 1e-6)) <= 1e-4);
}

TEST_CASE("smoothness loss is deterministic given the batch seed") {
  GeneratorParams p = make_mlp(2, {5}, 9, 43);
  const LatentBatch batch = draw_latent_batch(3, 2, 77);
  const auto a = smoothness_loss(p, batch, 0.05, 2);
  const auto b = smoothness_loss(p, batch, 0.05, 2);
  CHECK(a.value == b.value);
  CHECK((a.theta_gradient - b.theta_gradient).norm() == 0.0);
}

TEST_CASE("checkpoint JSON round-trips both kinds") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "arapreg_gen_tests";
  fs::create_directories(dir);

  for (const bool linear : {true, false}) {
    Checkpoint ck;
    ck.params = linear ? make_linear(3, 12, 51, 0.7) : make_mlp(3, {5, 4}, 12, 53);
    Rng rng(9);
    ck.latents.resize(4, 3);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 3; ++j) ck.latents(i, j) = rng.normal();
    ck.config.latent_dim = 3;
    ck.history.push_back({1, 0.5, 0.1, 0.2, 0.01, 0.81});

    const std::string path = (dir / (linear ? "lin.json" : "mlp.json")).string();
    save_checkpoint(ck, path);
    const Checkpoint back = load_checkpoint(path);
    CHECK(back.params.kind == ck.params.kind);
    CHECK(back.params.latent_dim == 3);
    for (Eigen::Index i = 0; i < ck.params.theta.size(); ++i)
      CHECK(back.params.theta[i] ==
            doctest::Approx(ck.params.theta[i]).epsilon(1e-15));
    CHECK((back.latents - ck.latents).norm() <= 1e-15 * std::max(1.0, ck.latents.norm()));
    CHECK(back.history.size() == 1);
  }
}
