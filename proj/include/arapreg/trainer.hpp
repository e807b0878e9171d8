#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "arapreg/generator.hpp"
#include "arapreg/mesh.hpp"
#include "arapreg/rng.hpp"

namespace arapreg {

enum class ReconNorm { l1_vertex, l2 };
enum class RegularizerMode { none, l2, robust, arap_to_base };

std::string to_string(ReconNorm n);
std::string to_string(RegularizerMode m);
ReconNorm recon_norm_from_string(const std::string& s);
RegularizerMode regularizer_mode_from_string(const std::string& s);

struct TrainConfig {
  double s = 0.05;
  double lambda_r = 1.0;
  double lambda_reg = 10.0;
  double lambda_kl = 1.0;
  double alpha = 0.5;
  ReconNorm recon_norm = ReconNorm::l1_vertex;
  int n_z = 4;
  int n_delta = 1;
  int alternating_iters = 30;
  int epochs_per_phase = 1;
  double lr_theta = 1e-3;
  double lr_z = 1e-2;
  std::uint64_t seed = 0;
  double eig_floor = 1e-8;
  double sigma = 0.2;  // extrapolation scale
  RegularizerMode regularizer_mode = RegularizerMode::robust;

  // generator architecture
  std::string generator_kind = "mlp";
  int latent_dim = 4;
  std::vector<int> hidden = {32};
  int refine_iters = 500;
};

TrainConfig train_config_from_json_file(const std::string& path);
TrainConfig train_config_from_json_string(const std::string& text);
std::string train_config_to_json(const TrainConfig& cfg);

// Standard adaptive-moment estimation; one instance per parameter group.
struct Adam {
  Eigen::VectorXd m, v;
  std::int64_t t = 0;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;

  void init(Eigen::Index size) {
    m = Eigen::VectorXd::Zero(size);
    v = Eigen::VectorXd::Zero(size);
    t = 0;
  }
  void step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& gradient, double lr);
};

struct LossAndGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

struct ReconstructionResult {
  double value = 0.0;
  VertexField cotangent;
};

ReconstructionResult reconstruction_loss(const VertexField& predicted, const VertexField& target,
                                         ReconNorm norm);

struct KlResult {
  double value = 0.0;
  Eigen::MatrixXd gradients;  // same shape as the latent set
};

// Moment-matched diagonal Gaussian KL against N(0, I), variance floored at
// 1e-6. Requires at least 2 latents.
KlResult kl_penalty(const Eigen::MatrixXd& latents);

struct RegLossResult {
  double value = 0.0;       // smoothness + lambda_r * spectral
  double smoothness = 0.0;
  double spectral = 0.0;
  Eigen::VectorXd gradient;
};

// Monte-Carlo estimate of the unsupervised loss over n_z prior draws:
// smoothness second differences plus the spectral term selected by
// cfg.regularizer_mode (for arap_to_base, `base` supplies the reference).
RegLossResult arapreg_loss(const GeneratorParams& params, const Mesh& mesh, const TrainConfig& cfg,
                           Rng& rng);
RegLossResult arapreg_loss(const GeneratorParams& params, const Mesh& mesh, const Mesh* base,
                           const TrainConfig& cfg, Rng& rng,
                           double dd_term_scale = 1.0);

// E_z arap_energy(base, g(z) - g_base), rotations fixed in the backward pass.
LossAndGradient arap_to_base_loss(const GeneratorParams& params, const Mesh& base,
                                  const TrainConfig& cfg, Rng& rng);

struct LossRow {
  int epoch = 0;
  double recon = 0.0, smooth = 0.0, spectral = 0.0, kl = 0.0, total = 0.0;
};

struct TrainState {
  GeneratorParams params;
  Eigen::MatrixXd latents;  // one row per training shape
  Adam theta_opt;
  std::vector<Adam> z_opts;
  std::vector<LossRow> history;
  TrainConfig config;
};

// Auto-decoder alternating minimization: one theta epoch (reconstruction +
// lambda_reg * L_reg), then one latent epoch (reconstruction + lambda_kl *
// KL), repeated cfg.alternating_iters times. Deterministic given cfg.seed.
TrainState train_auto_decoder(const std::vector<Mesh>& dataset, const TrainConfig& cfg);

// Frozen-generator latent fit from zero initialization; returns the
// best-seen latent within cfg.refine_iters Adam steps.
Eigen::VectorXd refine_latent(const GeneratorParams& params, const VertexField& target,
                              const TrainConfig& cfg);

void write_loss_csv(const std::vector<LossRow>& history, const std::string& path);

struct Checkpoint {
  GeneratorParams params;
  Eigen::MatrixXd latents;
  TrainConfig config;
  std::vector<LossRow> history;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace arapreg
