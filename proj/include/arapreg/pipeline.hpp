#pragma once

#include <string>
#include <vector>

#include "arapreg/mesh.hpp"
#include "arapreg/trainer.hpp"

namespace arapreg {

struct EvalReport {
  std::vector<double> per_shape_error;  // mean per-vertex Euclidean distance
  double mean_error = 0.0;
  double median_error = 0.0;
};

// refine_latent per shape against the frozen generator, then score.
EvalReport evaluate(const Checkpoint& ck, const std::vector<Mesh>& dataset);

struct InterpolationResult {
  std::vector<VertexField> frames;
  std::vector<double> step_energies;  // ARAP energy of each consecutive displacement
  double total_energy = 0.0;
  Eigen::VectorXd z_a, z_b;
};

// Linear latent interpolation between the refined codes of two target
// shapes; step_energies[i] = arap_energy(frame_i, frame_{i+1} - frame_i).
InterpolationResult interpolate(const Checkpoint& ck, const Mesh& connectivity,
                                const VertexField& target_a, const VertexField& target_b,
                                int steps);

struct ExtrapolationResult {
  VertexField reconstruction;
  std::vector<VertexField> samples;
  std::vector<double> sample_energies;  // ARAP energy of each sample vs the reconstruction
  Eigen::VectorXd z;
};

// Samples z + sigma * S . xi around the refined code, where S is the
// per-dimension standard deviation of the checkpoint's training latents.
ExtrapolationResult extrapolate(const Checkpoint& ck, const Mesh& connectivity,
                                const VertexField& target, int count, double sigma,
                                std::uint64_t seed);

}  // namespace arapreg
