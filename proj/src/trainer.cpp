#include "arapreg/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

#include "arapreg/arap.hpp"
#include "arapreg/spectral.hpp"

namespace arapreg {

using nlohmann::json;

std::string to_string(ReconNorm n) { return n == ReconNorm::l1_vertex ? "l1_vertex" : "l2"; }

std::string to_string(RegularizerMode m) {
  switch (m) {
    case RegularizerMode::none: return "none";
    case RegularizerMode::l2: return "l2";
    case RegularizerMode::robust: return "robust";
    case RegularizerMode::arap_to_base: return "arap_to_base";
  }
  return "?";
}

ReconNorm recon_norm_from_string(const std::string& s) {
  if (s == "l1_vertex") return ReconNorm::l1_vertex;
  if (s == "l2") return ReconNorm::l2;
  throw std::runtime_error("unknown recon_norm '" + s + "'");
}

RegularizerMode regularizer_mode_from_string(const std::string& s) {
  if (s == "none") return RegularizerMode::none;
  if (s == "l2") return RegularizerMode::l2;
  if (s == "robust") return RegularizerMode::robust;
  if (s == "arap_to_base") return RegularizerMode::arap_to_base;
  throw std::runtime_error("unknown regularizer_mode '" + s + "'");
}

namespace {

json config_to_json_obj(const TrainConfig& c) {
  return json{{"s", c.s},
              {"lambda_r", c.lambda_r},
              {"lambda_reg", c.lambda_reg},
              {"lambda_kl", c.lambda_kl},
              {"alpha", c.alpha},
              {"recon_norm", to_string(c.recon_norm)},
              {"n_z", c.n_z},
              {"n_delta", c.n_delta},
              {"alternating_iters", c.alternating_iters},
              {"epochs_per_phase", c.epochs_per_phase},
              {"lr_theta", c.lr_theta},
              {"lr_z", c.lr_z},
              {"seed", c.seed},
              {"eig_floor", c.eig_floor},
              {"sigma", c.sigma},
              {"regularizer_mode", to_string(c.regularizer_mode)},
              {"generator_kind", c.generator_kind},
              {"latent_dim", c.latent_dim},
              {"hidden", c.hidden},
              {"refine_iters", c.refine_iters}};
}

TrainConfig config_from_json_obj(const json& j) {
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "s") c.s = value.get<double>();
    else if (key == "lambda_r") c.lambda_r = value.get<double>();
    else if (key == "lambda_reg") c.lambda_reg = value.get<double>();
    else if (key == "lambda_kl") c.lambda_kl = value.get<double>();
    else if (key == "alpha") c.alpha = value.get<double>();
    else if (key == "recon_norm") c.recon_norm = recon_norm_from_string(value.get<std::string>());
    else if (key == "n_z") c.n_z = value.get<int>();
    else if (key == "n_delta") c.n_delta = value.get<int>();
    else if (key == "alternating_iters") c.alternating_iters = value.get<int>();
    else if (key == "epochs_per_phase") c.epochs_per_phase = value.get<int>();
    else if (key == "lr_theta") c.lr_theta = value.get<double>();
    else if (key == "lr_z") c.lr_z = value.get<double>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "eig_floor") c.eig_floor = value.get<double>();
    else if (key == "sigma") c.sigma = value.get<double>();
    else if (key == "regularizer_mode") c.regularizer_mode = regularizer_mode_from_string(value.get<std::string>());
    else if (key == "generator_kind") c.generator_kind = value.get<std::string>();
    else if (key == "latent_dim") c.latent_dim = value.get<int>();
    else if (key == "hidden") c.hidden = value.get<std::vector<int>>();
    else if (key == "refine_iters") c.refine_iters = value.get<int>();
    else throw std::runtime_error("unknown config key '" + key + "'");
  }
  return c;
}

}  // namespace

TrainConfig train_config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  json j;
  in >> j;
  return config_from_json_obj(j);
}

TrainConfig train_config_from_json_string(const std::string& text) {
  return config_from_json_obj(json::parse(text));
}

std::string train_config_to_json(const TrainConfig& cfg) { return config_to_json_obj(cfg).dump(2); }

void Adam::step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& gradient, double lr) {
  if (params.size() != m.size()) throw std::runtime_error("adam: parameter/moment shape mismatch");
  ++t;
  m = beta1 * m + (1.0 - beta1) * gradient;
  v = beta2 * v.eval() + (1.0 - beta2) * gradient.cwiseProduct(gradient);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + epsilon);
}

ReconstructionResult reconstruction_loss(const VertexField& predicted, const VertexField& target,
                                         ReconNorm norm) {
  if (predicted.size() != target.size())
    throw std::runtime_error("reconstruction_loss: length mismatch");
  ReconstructionResult out;
  out.cotangent = VertexField::Zero(predicted.size());
  if (norm == ReconNorm::l2) {
    const VertexField diff = predicted - target;
    out.value = diff.squaredNorm() / static_cast<double>(diff.size());
    out.cotangent = (2.0 / static_cast<double>(diff.size())) * diff;
    return out;
  }
  const int n = static_cast<int>(predicted.size() / 3);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d d = predicted.segment<3>(3 * i) - target.segment<3>(3 * i);
    const double dist = d.norm();
    out.value += dist / n;
    if (dist > 0.0) out.cotangent.segment<3>(3 * i) = d / (dist * n);
  }
  return out;
}

KlResult kl_penalty(const Eigen::MatrixXd& latents) {
  const int count = static_cast<int>(latents.rows());
  const int k = static_cast<int>(latents.cols());
  if (count < 2) throw std::runtime_error("kl_penalty: needs at least 2 latents");
  constexpr double kVarianceFloor = 1e-6;

  KlResult out;
  out.gradients = Eigen::MatrixXd::Zero(count, k);
  for (int j = 0; j < k; ++j) {
    const double mu = latents.col(j).mean();
    const double var_raw = (latents.col(j).array() - mu).square().mean();
    const double var = std::max(var_raw, kVarianceFloor);
    out.value += 0.5 * (var + mu * mu - 1.0 - std::log(var));
    for (int i = 0; i < count; ++i) {
      double g = mu / count;
      if (var_raw > kVarianceFloor)
        g += (1.0 - 1.0 / var) * (latents(i, j) - mu) / count;
      out.gradients(i, j) = g;
    }
  }
  return out;
}

RegLossResult arapreg_loss(const GeneratorParams& params, const Mesh& mesh, const TrainConfig& cfg,
                           Rng& rng) {
  return arapreg_loss(params, mesh, &mesh, cfg, rng);
}

RegLossResult arapreg_loss(const GeneratorParams& params, const Mesh& mesh, const Mesh* base,
                           const TrainConfig& cfg, Rng& rng, double dd_term_scale) {
  RegLossResult out;
  out.gradient = Eigen::VectorXd::Zero(params.theta.size());
  const int k = params.latent_dim;
  const double inv_nz = 1.0 / cfg.n_z;

  for (int sample = 0; sample < cfg.n_z; ++sample) {
    const Eigen::VectorXd z = rng.normal_vector(k);

    // smoothness second differences
    for (int d = 0; d < cfg.n_delta; ++d) {
      const Eigen::VectorXd dz = cfg.s * rng.normal_vector(k);
      const VertexField r =
          forward(params, z + dz) - 2.0 * forward(params, z) + forward(params, z - dz);
      const double scale = inv_nz / cfg.n_delta;
      out.smoothness += scale * r.squaredNorm();
      const VertexField cot = (2.0 * scale) * r;
      out.gradient += vjp_theta(params, z + dz, cot) - 2.0 * vjp_theta(params, z, cot) +
                      vjp_theta(params, z - dz, cot);
    }

    if (cfg.regularizer_mode == RegularizerMode::none) continue;

    if (cfg.regularizer_mode == RegularizerMode::arap_to_base) {
      if (base == nullptr) throw std::runtime_error("arapreg_loss: arap_to_base needs a base mesh");
      const VertexField g = forward(params, z);
      const VertexField rest = base->positions();
      const VertexField x = g - rest;
      out.spectral += inv_nz * arap_energy(*base, rest, x);
      const VertexField cot = (cfg.lambda_r * inv_nz) * arap_energy_gradient(*base, rest, x);
      out.gradient += vjp_theta(params, z, cot);
      continue;
    }

    const double alpha = cfg.regularizer_mode == RegularizerMode::l2 ? 1.0 : cfg.alpha;
    const VertexField g = forward(params, z);
    const Eigen::MatrixXd j = jacobian(params, z, cfg.s);
    const ArapHessian h = assemble_hessian(mesh, g);
    const ReducedHessian red = reduce(h, j);
    const Spectrum spec = eigdecompose(red);
    out.spectral += inv_nz * robust_regularizer(spec, alpha);

    // dJ u differentiates the same central-difference estimator that built J
    DirectionalJacobianVjp dj_vjp = [&](const Eigen::VectorXd& u, const VertexField& q) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(params.theta.size());
      for (int l = 0; l < k; ++l) {
        if (u[l] == 0.0) continue;
        Eigen::VectorXd zp = z, zm = z;
        zp[l] += cfg.s;
        zm[l] -= cfg.s;
        acc += (u[l] / (2.0 * cfg.s)) * (vjp_theta(params, zp, q) - vjp_theta(params, zm, q));
      }
      return acc;
    };
    GeometryVjp dg_vjp = [&](const VertexField& cot) { return vjp_theta(params, z, cot); };

    RegularizerGradientOptions opts;
    opts.eig_floor_coeff = cfg.eig_floor;
    opts.dd_term_scale = dd_term_scale;
    out.gradient +=
        (cfg.lambda_r * inv_nz) * regularizer_gradient(spec, red, h, mesh, alpha, dj_vjp, dg_vjp, opts);
  }
  out.value = out.smoothness + cfg.lambda_r * out.spectral;
  return out;
}

LossAndGradient arap_to_base_loss(const GeneratorParams& params, const Mesh& base,
                                  const TrainConfig& cfg, Rng& rng) {
  LossAndGradient out;
  out.gradient = Eigen::VectorXd::Zero(params.theta.size());
  const VertexField rest = base.positions();
  const double inv_nz = 1.0 / cfg.n_z;
  for (int sample = 0; sample < cfg.n_z; ++sample) {
    const Eigen::VectorXd z = rng.normal_vector(params.latent_dim);
    const VertexField x = forward(params, z) - rest;
    out.value += inv_nz * arap_energy(base, rest, x);
    out.gradient += vjp_theta(params, z, inv_nz * arap_energy_gradient(base, rest, x));
  }
  return out;
}

namespace {

void check_dataset(const std::vector<Mesh>& dataset) {
  if (dataset.empty()) throw std::runtime_error("train_auto_decoder: empty dataset");
  for (size_t i = 1; i < dataset.size(); ++i)
    if (!dataset[0].same_connectivity(dataset[i]))
      throw std::runtime_error("train_auto_decoder: shape " + std::to_string(i) +
                               " has different connectivity");
}

GeneratorParams init_generator(const TrainConfig& cfg, const std::vector<Mesh>& dataset) {
  const int n3 = 3 * dataset[0].vertex_count();
  const std::uint64_t seed = Rng::derive(cfg.seed, 1);
  if (cfg.generator_kind == "linear") {
    GeneratorParams p = make_linear(cfg.latent_dim, n3, seed, 0.01);
    // anchor the affine part at the dataset mean
    VertexField mean = VertexField::Zero(n3);
    for (const auto& m : dataset) mean += m.positions();
    mean /= static_cast<double>(dataset.size());
    p.theta.tail(n3) = mean;
    return p;
  }
  if (cfg.generator_kind == "mlp") return make_mlp(cfg.latent_dim, cfg.hidden, n3, seed);
  throw std::runtime_error("unknown generator_kind '" + cfg.generator_kind + "'");
}

}  // namespace

TrainState train_auto_decoder(const std::vector<Mesh>& dataset, const TrainConfig& cfg) {
  check_dataset(dataset);
  const Mesh& mesh = dataset[0];
  const int count = static_cast<int>(dataset.size());
  const int k = cfg.latent_dim;

  std::vector<VertexField> targets;
  targets.reserve(dataset.size());
  for (const auto& m : dataset) targets.push_back(m.positions());

  TrainState st;
  st.config = cfg;
  st.params = init_generator(cfg, dataset);
  st.latents.resize(count, k);
  {
    Rng rng(Rng::derive(cfg.seed, 2));
    for (int i = 0; i < count; ++i)
      for (int j = 0; j < k; ++j) st.latents(i, j) = rng.normal();
  }
  st.theta_opt.init(st.params.theta.size());
  st.z_opts.resize(static_cast<size_t>(count));
  for (auto& opt : st.z_opts) opt.init(k);

  Rng reg_rng(Rng::derive(cfg.seed, 3));

  for (int iter = 1; iter <= cfg.alternating_iters; ++iter) {
    LossRow row;
    row.epoch = iter;
    int theta_steps = 0;

    // theta phase (Eq. 11): reconstruction + lambda_reg * L_reg, latents fixed
    for (int epoch = 0; epoch < cfg.epochs_per_phase; ++epoch) {
      for (int i = 0; i < count; ++i) {
        const Eigen::VectorXd z = st.latents.row(i).transpose();
        const VertexField pred = forward(st.params, z);
        const auto rec = reconstruction_loss(pred, targets[static_cast<size_t>(i)], cfg.recon_norm);
        Eigen::VectorXd grad = vjp_theta(st.params, z, rec.cotangent);
        row.recon += rec.value;
        if (cfg.lambda_reg != 0.0) {
          const auto reg = arapreg_loss(st.params, mesh, &mesh, cfg, reg_rng);
          grad += cfg.lambda_reg * reg.gradient;
          row.smooth += reg.smoothness;
          row.spectral += reg.spectral;
        }
        st.theta_opt.step(st.params.theta, grad, cfg.lr_theta);
        ++theta_steps;
      }
    }
    row.recon /= theta_steps;
    row.smooth /= theta_steps;
    row.spectral /= theta_steps;

    // latent phase (Eq. 12): reconstruction + lambda_kl * KL, theta fixed
    for (int epoch = 0; epoch < cfg.epochs_per_phase; ++epoch) {
      for (int i = 0; i < count; ++i) {
        Eigen::VectorXd z = st.latents.row(i).transpose();
        const VertexField pred = forward(st.params, z);
        const auto rec = reconstruction_loss(pred, targets[static_cast<size_t>(i)], cfg.recon_norm);
        Eigen::VectorXd grad = vjp_z(st.params, z, rec.cotangent);
        if (cfg.lambda_kl != 0.0) {
          const auto kl = kl_penalty(st.latents);
          grad += cfg.lambda_kl * kl.gradients.row(i).transpose();
        }
        st.z_opts[static_cast<size_t>(i)].step(z, grad, cfg.lr_z);
        st.latents.row(i) = z.transpose();
      }
    }

    row.kl = cfg.lambda_kl != 0.0 ? kl_penalty(st.latents).value : 0.0;
    row.total = row.recon + cfg.lambda_reg * (row.smooth + cfg.lambda_r * row.spectral) +
                cfg.lambda_kl * row.kl;
    if (!std::isfinite(row.total)) {
      std::string bad = "total";
      if (!std::isfinite(row.recon)) bad = "recon";
      else if (!std::isfinite(row.smooth)) bad = "smooth";
      else if (!std::isfinite(row.spectral)) bad = "spectral";
      else if (!std::isfinite(row.kl)) bad = "kl";
      throw std::runtime_error("train_auto_decoder: non-finite '" + bad + "' loss at iteration " +
                               std::to_string(iter));
    }
    st.history.push_back(row);
  }
  return st;
}

Eigen::VectorXd refine_latent(const GeneratorParams& params, const VertexField& target,
                              const TrainConfig& cfg) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(params.latent_dim);
  if (cfg.refine_iters <= 0) return z;
  Adam opt;
  opt.init(params.latent_dim);
  Eigen::VectorXd best_z = z;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.refine_iters; ++it) {
    const auto rec = reconstruction_loss(forward(params, z), target, cfg.recon_norm);
    if (rec.value < best_loss) {
      best_loss = rec.value;
      best_z = z;
    }
    opt.step(z, vjp_z(params, z, rec.cotangent), cfg.lr_z);
  }
  if (reconstruction_loss(forward(params, z), target, cfg.recon_norm).value < best_loss) best_z = z;
  return best_z;
}

void write_loss_csv(const std::vector<LossRow>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "epoch,recon,smooth,spectral,kl,total\n";
  char buf[256];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.recon,
                  r.smooth, r.spectral, r.kl, r.total);
    out << buf;
  }
}

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  const GeneratorParams& p = ck.params;
  json j;
  j["version"] = 1;
  j["kind"] = to_string(p.kind);
  j["arch"] = json{{"hidden", p.hidden}, {"activation", "tanh"}};
  j["k"] = p.latent_dim;
  j["n"] = p.output_dim / 3;
  if (p.kind == GeneratorKind::linear) {
    j["theta"] = vector_to_json(p.theta.head(p.output_dim * p.latent_dim));
    j["g0"] = vector_to_json(p.theta.tail(p.output_dim));
  } else {
    j["theta"] = vector_to_json(p.theta);
    j["g0"] = json::array();
  }
  json lat = json::array();
  for (Eigen::Index i = 0; i < ck.latents.rows(); ++i)
    lat.push_back(vector_to_json(ck.latents.row(i).transpose()));
  j["latents"] = lat;
  j["config"] = config_to_json_obj(ck.config);
  json hist = json::array();
  for (const auto& r : ck.history)
    hist.push_back(json{{"epoch", r.epoch},
                        {"recon", r.recon},
                        {"smooth", r.smooth},
                        {"spectral", r.spectral},
                        {"kl", r.kl},
                        {"total", r.total}});
  j["loss_history"] = hist;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  json j;
  in >> j;

  Checkpoint ck;
  GeneratorParams& p = ck.params;
  p.kind = generator_kind_from_string(j.at("kind").get<std::string>());
  p.latent_dim = j.at("k").get<int>();
  p.output_dim = 3 * j.at("n").get<int>();
  p.hidden = j.at("arch").at("hidden").get<std::vector<int>>();
  const Eigen::VectorXd theta = vector_from_json(j.at("theta"));
  const Eigen::VectorXd g0 = vector_from_json(j.at("g0"));
  if (p.kind == GeneratorKind::linear) {
    p.theta.resize(theta.size() + g0.size());
    p.theta << theta, g0;
  } else {
    p.theta = theta;
  }
  p.validate();

  const json& lat = j.at("latents");
  ck.latents.resize(static_cast<Eigen::Index>(lat.size()), p.latent_dim);
  for (size_t i = 0; i < lat.size(); ++i)
    ck.latents.row(static_cast<Eigen::Index>(i)) = vector_from_json(lat[i]).transpose();

  ck.config = config_from_json_obj(j.at("config"));
  for (const auto& r : j.at("loss_history")) {
    LossRow row;
    row.epoch = r.at("epoch").get<int>();
    row.recon = r.at("recon").get<double>();
    row.smooth = r.at("smooth").get<double>();
    row.spectral = r.at("spectral").get<double>();
    row.kl = r.at("kl").get<double>();
    row.total = r.at("total").get<double>();
    ck.history.push_back(row);
  }
  return ck;
}

}  // namespace arapreg
