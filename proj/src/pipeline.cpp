#include "arapreg/pipeline.hpp"

#include <algorithm>
#include <stdexcept>

#include "arapreg/arap.hpp"
#include "arapreg/rng.hpp"

namespace arapreg {

namespace {

// Latent refinement for evaluation minimizes the smooth l2 objective (Adam
// settles exactly on it); the reported metric stays the per-vertex distance.
Eigen::VectorXd refine_for_eval(const Checkpoint& ck, const VertexField& target) {
  TrainConfig cfg = ck.config;
  cfg.recon_norm = ReconNorm::l2;
  return refine_latent(ck.params, target, cfg);
}

}  // namespace

EvalReport evaluate(const Checkpoint& ck, const std::vector<Mesh>& dataset) {
  if (dataset.empty()) throw std::runtime_error("evaluate: empty dataset");
  EvalReport rep;
  for (const auto& mesh : dataset) {
    if (3 * mesh.vertex_count() != ck.params.output_dim)
      throw std::runtime_error("evaluate: mesh does not match checkpoint connectivity");
    const VertexField target = mesh.positions();
    const Eigen::VectorXd z = refine_for_eval(ck, target);
    rep.per_shape_error.push_back(
        reconstruction_loss(forward(ck.params, z), target, ReconNorm::l1_vertex).value);
  }
  const auto& e = rep.per_shape_error;
  rep.mean_error = 0.0;
  for (double v : e) rep.mean_error += v;
  rep.mean_error /= static_cast<double>(e.size());
  std::vector<double> sorted = e;
  std::sort(sorted.begin(), sorted.end());
  const size_t mid = sorted.size() / 2;
  rep.median_error =
      sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return rep;
}

InterpolationResult interpolate(const Checkpoint& ck, const Mesh& connectivity,
                                const VertexField& target_a, const VertexField& target_b,
                                int steps) {
  if (steps < 2) throw std::runtime_error("interpolate: steps must be >= 2");
  if (3 * connectivity.vertex_count() != ck.params.output_dim)
    throw std::runtime_error("interpolate: connectivity mismatch");
  InterpolationResult out;
  out.z_a = refine_for_eval(ck, target_a);
  out.z_b = refine_for_eval(ck, target_b);
  for (int i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) / (steps - 1);
    out.frames.push_back(forward(ck.params, (1.0 - t) * out.z_a + t * out.z_b));
  }
  for (size_t i = 0; i + 1 < out.frames.size(); ++i) {
    const double e =
        arap_energy(connectivity, out.frames[i], out.frames[i + 1] - out.frames[i]);
    out.step_energies.push_back(e);
    out.total_energy += e;
  }
  return out;
}

ExtrapolationResult extrapolate(const Checkpoint& ck, const Mesh& connectivity,
                                const VertexField& target, int count, double sigma,
                                std::uint64_t seed) {
  if (count < 1) throw std::runtime_error("extrapolate: count must be >= 1");
  if (ck.latents.rows() == 0)
    throw std::runtime_error("extrapolate: checkpoint has no training latents");
  if (3 * connectivity.vertex_count() != ck.params.output_dim)
    throw std::runtime_error("extrapolate: connectivity mismatch");

  ExtrapolationResult out;
  out.z = refine_for_eval(ck, target);
  out.reconstruction = forward(ck.params, out.z);

  // per-dimension standard deviation of the training latents
  const int k = ck.params.latent_dim;
  Eigen::VectorXd scale(k);
  for (int j = 0; j < k; ++j) {
    const double mu = ck.latents.col(j).mean();
    scale[j] = std::sqrt((ck.latents.col(j).array() - mu).square().mean());
  }

  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    const Eigen::VectorXd xi = rng.normal_vector(k);
    const VertexField sample = forward(ck.params, out.z + sigma * scale.cwiseProduct(xi));
    out.sample_energies.push_back(
        arap_energy(connectivity, out.reconstruction, sample - out.reconstruction));
    out.samples.push_back(sample);
  }
  return out;
}

}  // namespace arapreg
