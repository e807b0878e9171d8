#include "arapreg/generator.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace arapreg {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string to_string(GeneratorKind kind) {
  return kind == GeneratorKind::linear ? "linear" : "mlp";
}

GeneratorKind generator_kind_from_string(const std::string& s) {
  if (s == "linear") return GeneratorKind::linear;
  if (s == "mlp") return GeneratorKind::mlp;
  throw std::runtime_error("unknown generator kind '" + s + "'");
}

std::vector<int> GeneratorParams::layer_dims() const {
  std::vector<int> dims;
  dims.push_back(latent_dim);
  if (kind == GeneratorKind::mlp)
    for (int h : hidden) dims.push_back(h);
  dims.push_back(output_dim);
  return dims;
}

int GeneratorParams::parameter_count() const {
  if (kind == GeneratorKind::linear) return output_dim * latent_dim + output_dim;
  const auto dims = layer_dims();
  int count = 0;
  for (size_t l = 0; l + 1 < dims.size(); ++l)
    count += dims[l + 1] * dims[l] + dims[l + 1];
  return count;
}

void GeneratorParams::validate() const {
  if (latent_dim < 1) throw std::runtime_error("generator: latent dimension must be >= 1");
  if (output_dim < 3) throw std::runtime_error("generator: output dimension must be >= 3");
  if (theta.size() != parameter_count())
    throw std::runtime_error("generator: parameter vector length " + std::to_string(theta.size()) +
                             " does not match architecture (" + std::to_string(parameter_count()) + ")");
  if (!theta.allFinite()) throw std::runtime_error("generator: non-finite parameters");
}

Eigen::Map<const RowMajorMatrix> GeneratorParams::linear_w() const {
  return {theta.data(), output_dim, latent_dim};
}

Eigen::Map<const Eigen::VectorXd> GeneratorParams::linear_g0() const {
  return {theta.data() + output_dim * latent_dim, output_dim};
}

GeneratorParams make_linear(int latent_dim, int output_dim, std::uint64_t seed, double w_scale) {
  GeneratorParams p;
  p.kind = GeneratorKind::linear;
  p.latent_dim = latent_dim;
  p.output_dim = output_dim;
  p.theta = Eigen::VectorXd::Zero(p.parameter_count());
  Rng rng(seed);
  for (int i = 0; i < output_dim * latent_dim; ++i) p.theta[i] = w_scale * rng.normal();
  p.validate();
  return p;
}

GeneratorParams make_mlp(int latent_dim, const std::vector<int>& hidden, int output_dim,
                         std::uint64_t seed) {
  GeneratorParams p;
  p.kind = GeneratorKind::mlp;
  p.latent_dim = latent_dim;
  p.output_dim = output_dim;
  p.hidden = hidden;
  p.theta = Eigen::VectorXd::Zero(p.parameter_count());
  Rng rng(seed);
  const auto dims = p.layer_dims();
  int offset = 0;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l], fan_out = dims[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (int i = 0; i < fan_out * fan_in; ++i) p.theta[offset + i] = rng.uniform_in(-bound, bound);
    offset += fan_out * fan_in + fan_out;  // biases stay zero
  }
  p.validate();
  return p;
}

namespace {

struct LayerView {
  Eigen::Map<const RowMajorMatrix> w;
  Eigen::Map<const Eigen::VectorXd> b;
};

std::vector<LayerView> layer_views(const GeneratorParams& p) {
  const auto dims = p.layer_dims();
  std::vector<LayerView> views;
  int offset = 0;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l], out = dims[l + 1];
    views.push_back({{p.theta.data() + offset, out, in},
                     {p.theta.data() + offset + out * in, out}});
    offset += out * in + out;
  }
  return views;
}

void check_latent(const GeneratorParams& p, const Eigen::VectorXd& z) {
  if (z.size() != p.latent_dim)
    throw std::runtime_error("generator: latent has dimension " + std::to_string(z.size()) +
                             ", expected " + std::to_string(p.latent_dim));
}

// Activations per layer; activations[0] = z, activations.back() = output.
std::vector<Eigen::VectorXd> run_forward(const GeneratorParams& p, const Eigen::VectorXd& z) {
  const auto views = layer_views(p);
  std::vector<Eigen::VectorXd> acts;
  acts.reserve(views.size() + 1);
  acts.push_back(z);
  for (size_t l = 0; l < views.size(); ++l) {
    Eigen::VectorXd pre = views[l].w * acts.back() + views[l].b;
    if (l + 1 < views.size()) pre = pre.array().tanh();
    acts.push_back(std::move(pre));
  }
  return acts;
}

}  // namespace

VertexField forward(const GeneratorParams& params, const Eigen::VectorXd& z) {
  check_latent(params, z);
  if (params.kind == GeneratorKind::linear)
    return params.linear_g0() + params.linear_w() * z;
  return run_forward(params, z).back();
}

VertexField jvp(const GeneratorParams& params, const Eigen::VectorXd& z, const Eigen::VectorXd& dz) {
  check_latent(params, z);
  check_latent(params, dz);
  if (params.kind == GeneratorKind::linear) return params.linear_w() * dz;
  const auto views = layer_views(params);
  const auto acts = run_forward(params, z);
  Eigen::VectorXd tangent = dz;
  for (size_t l = 0; l < views.size(); ++l) {
    tangent = views[l].w * tangent;
    if (l + 1 < views.size()) {
      // d tanh(u) = (1 - tanh(u)^2) du; acts[l+1] already holds tanh(u)
      tangent.array() *= 1.0 - acts[l + 1].array().square();
    }
  }
  return tangent;
}

Eigen::VectorXd vjp_theta(const GeneratorParams& params, const Eigen::VectorXd& z,
                          const VertexField& cotangent) {
  check_latent(params, z);
  if (cotangent.size() != params.output_dim)
    throw std::runtime_error("vjp_theta: cotangent length mismatch");
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.theta.size());
  if (params.kind == GeneratorKind::linear) {
    Eigen::Map<RowMajorMatrix> gw(grad.data(), params.output_dim, params.latent_dim);
    gw = cotangent * z.transpose();
    grad.tail(params.output_dim) = cotangent;
    return grad;
  }
  const auto views = layer_views(params);
  const auto acts = run_forward(params, z);
  const auto dims = params.layer_dims();

  std::vector<int> offsets(views.size());
  int offset = 0;
  for (size_t l = 0; l < views.size(); ++l) {
    offsets[l] = offset;
    offset += dims[l + 1] * dims[l] + dims[l + 1];
  }

  Eigen::VectorXd delta = cotangent;
  for (size_t l = views.size(); l-- > 0;) {
    if (l + 1 < views.size()) delta.array() *= 1.0 - acts[l + 1].array().square();
    Eigen::Map<RowMajorMatrix> gw(grad.data() + offsets[l], dims[l + 1], dims[l]);
    gw += delta * acts[l].transpose();
    grad.segment(offsets[l] + dims[l + 1] * dims[l], dims[l + 1]) += delta;
    delta = views[l].w.transpose() * delta;
  }
  return grad;
}

Eigen::VectorXd vjp_z(const GeneratorParams& params, const Eigen::VectorXd& z,
                      const VertexField& cotangent) {
  check_latent(params, z);
  if (cotangent.size() != params.output_dim)
    throw std::runtime_error("vjp_z: cotangent length mismatch");
  if (params.kind == GeneratorKind::linear)
    return params.linear_w().transpose() * cotangent;
  const auto views = layer_views(params);
  const auto acts = run_forward(params, z);
  Eigen::VectorXd delta = cotangent;
  for (size_t l = views.size(); l-- > 0;) {
    if (l + 1 < views.size()) delta.array() *= 1.0 - acts[l + 1].array().square();
    delta = views[l].w.transpose() * delta;
  }
  return delta;
}

Eigen::MatrixXd jacobian(const GeneratorParams& params, const Eigen::VectorXd& z, double s) {
  check_latent(params, z);
  if (params.kind == GeneratorKind::linear) return params.linear_w();
  Eigen::MatrixXd j(params.output_dim, params.latent_dim);
  for (int l = 0; l < params.latent_dim; ++l) {
    Eigen::VectorXd zp = z, zm = z;
    zp[l] += s;
    zm[l] -= s;
    j.col(l) = (forward(params, zp) - forward(params, zm)) / (2.0 * s);
  }
  return j;
}

LatentBatch draw_latent_batch(int count, int latent_dim, std::uint64_t seed) {
  LatentBatch b;
  b.seed = seed;
  b.latents.resize(count, latent_dim);
  Rng rng(seed);
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < latent_dim; ++j) b.latents(i, j) = rng.normal();
  return b;
}

SmoothnessResult smoothness_loss(const GeneratorParams& params, const LatentBatch& batch,
                                 double s, int n_delta) {
  if (n_delta < 1) throw std::runtime_error("smoothness_loss: n_delta must be >= 1");
  const int m = static_cast<int>(batch.latents.rows());
  Rng rng(Rng::derive(batch.seed, 1));
  SmoothnessResult out;
  out.theta_gradient = Eigen::VectorXd::Zero(params.theta.size());
  const double inv_count = 1.0 / (m * n_delta);
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd z = batch.latents.row(i).transpose();
    for (int d = 0; d < n_delta; ++d) {
      const Eigen::VectorXd dz = s * rng.normal_vector(params.latent_dim);
      const VertexField r = forward(params, z + dz) - 2.0 * forward(params, z) + forward(params, z - dz);
      out.value += inv_count * r.squaredNorm();
      const VertexField cot = (2.0 * inv_count) * r;
      out.theta_gradient += vjp_theta(params, z + dz, cot) - 2.0 * vjp_theta(params, z, cot) +
                            vjp_theta(params, z - dz, cot);
    }
  }
  return out;
}

double smoothness_value(const std::function<VertexField(const Eigen::VectorXd&)>& gen_eval,
                        const Eigen::MatrixXd& latents, const Eigen::MatrixXd& deltas) {
  if (latents.rows() != deltas.rows()) throw std::runtime_error("smoothness_value: row mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < latents.rows(); ++i) {
    const Eigen::VectorXd z = latents.row(i).transpose();
    const Eigen::VectorXd dz = deltas.row(i).transpose();
    total += (gen_eval(z + dz) - 2.0 * gen_eval(z) + gen_eval(z - dz)).squaredNorm();
  }
  return total / static_cast<double>(latents.rows());
}

}  // namespace arapreg
