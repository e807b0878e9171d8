#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "arapreg/mesh.hpp"
#include "arapreg/rng.hpp"

namespace arapreg {

enum class GeneratorKind { linear, mlp };

std::string to_string(GeneratorKind kind);
GeneratorKind generator_kind_from_string(const std::string& s);

// Parametric map z in R^k -> vertex positions in R^3n.
//
// linear: g(z) = g0 + W z with theta = [W row-major | g0].
// mlp: affine layers k -> hidden... -> 3n, tanh on hidden layers, linear
//      output; theta packs [W_l row-major | b_l] per layer.
struct GeneratorParams {
  GeneratorKind kind = GeneratorKind::linear;
  int latent_dim = 0;
  int output_dim = 0;             // 3n
  std::vector<int> hidden;        // mlp only
  Eigen::VectorXd theta;

  std::vector<int> layer_dims() const;  // [k, hidden..., 3n]
  int parameter_count() const;
  void validate() const;

  // linear-kind views into theta
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> linear_w() const;
  Eigen::Map<const Eigen::VectorXd> linear_g0() const;
};

GeneratorParams make_linear(int latent_dim, int output_dim, std::uint64_t seed,
                            double w_scale = 0.1);
// Xavier-uniform weights, zero biases.
GeneratorParams make_mlp(int latent_dim, const std::vector<int>& hidden, int output_dim,
                         std::uint64_t seed);

VertexField forward(const GeneratorParams& params, const Eigen::VectorXd& z);

// Forward-mode directional derivative J(z) dz (exact, analytic).
VertexField jvp(const GeneratorParams& params, const Eigen::VectorXd& z, const Eigen::VectorXd& dz);

// Reverse-mode: gradient of cotangent . g(z) with respect to theta / z.
Eigen::VectorXd vjp_theta(const GeneratorParams& params, const Eigen::VectorXd& z,
                          const VertexField& cotangent);
Eigen::VectorXd vjp_z(const GeneratorParams& params, const Eigen::VectorXd& z,
                      const VertexField& cotangent);

// Column l is the central-difference directional derivative along e_l;
// exact W for the linear kind.
Eigen::MatrixXd jacobian(const GeneratorParams& params, const Eigen::VectorXd& z, double s);

struct LatentBatch {
  Eigen::MatrixXd latents;  // m x k
  std::uint64_t seed = 0;
};

LatentBatch draw_latent_batch(int count, int latent_dim, std::uint64_t seed);

struct SmoothnessResult {
  double value = 0.0;
  Eigen::VectorXd theta_gradient;
};

// Monte-Carlo E |g(z+dz) - 2 g(z) + g(z-dz)|^2 with dz ~ s N_k, plus the
// exact gradient of the estimate. Deterministic given batch.seed.
SmoothnessResult smoothness_loss(const GeneratorParams& params, const LatentBatch& batch,
                                 double s, int n_delta);

// Value-only second-difference estimate for an arbitrary evaluator (test
// oracles use this with non-parametric generators).
double smoothness_value(const std::function<VertexField(const Eigen::VectorXd&)>& gen_eval,
                        const Eigen::MatrixXd& latents, const Eigen::MatrixXd& deltas);

}  // namespace arapreg
