#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "arapreg/arap.hpp"
#include "arapreg/gradcheck.hpp"
#include "arapreg/obj_io.hpp"
#include "arapreg/pipeline.hpp"
#include "arapreg/spectral.hpp"
#include "arapreg/synthetic.hpp"
#include "arapreg/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace arapreg;

namespace {

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

json config_echo(const TrainConfig& cfg) { return json::parse(train_config_to_json(cfg)); }

int cmd_gen_dataset(const BendingBarSpec& spec, const std::string& out) {
  const auto samples = generate_bar_dataset(spec, out);
  std::cout << "wrote " << samples.size() << " samples to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& dataset_dir, const TrainConfig& cfg, const std::string& out) {
  const auto dataset = load_dataset(dataset_dir);
  const TrainState st = train_auto_decoder(dataset, cfg);
  fs::create_directories(out);
  Checkpoint ck{st.params, st.latents, st.config, st.history};
  save_checkpoint(ck, (fs::path(out) / "checkpoint.json").string());
  write_loss_csv(st.history, (fs::path(out) / "loss.csv").string());
  const auto& last = st.history.back();
  std::printf("final: recon %.6g smooth %.6g spectral %.6g kl %.6g total %.6g\n", last.recon,
              last.smooth, last.spectral, last.kl, last.total);
  return std::isfinite(last.total) ? 0 : 1;
}

int cmd_eval(const std::string& checkpoint, const std::string& dataset_dir,
             const std::string& out) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  const auto dataset = load_dataset(dataset_dir);
  const EvalReport rep = evaluate(ck, dataset);

  std::printf("%-8s %s\n", "shape", "per-vertex error");
  for (size_t i = 0; i < rep.per_shape_error.size(); ++i)
    std::printf("%-8zu %.9g\n", i, rep.per_shape_error[i]);
  std::printf("mean   %.9g\nmedian %.9g\n", rep.mean_error, rep.median_error);

  if (!out.empty()) {
    fs::create_directories(out);
    json j;
    j["checkpoint"] = checkpoint;
    j["dataset"] = dataset_dir;
    j["per_shape_error"] = rep.per_shape_error;
    j["mean_error"] = rep.mean_error;
    j["median_error"] = rep.median_error;
    j["config"] = config_echo(ck.config);
    write_json(j, fs::path(out) / "eval.json");
  }
  return 0;
}

int cmd_interpolate(const std::string& checkpoint, const std::string& mesh_a,
                    const std::string& mesh_b, int steps, const std::string& out) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  const Mesh a = load_obj(mesh_a);
  const Mesh b = load_obj(mesh_b);
  if (!a.same_connectivity(b)) throw std::runtime_error("interpolate: endpoint connectivity differs");
  const InterpolationResult res = interpolate(ck, a, a.positions(), b.positions(), steps);

  fs::create_directories(out);
  Mesh frame = a;
  for (size_t i = 0; i < res.frames.size(); ++i) {
    frame.set_positions(res.frames[i]);
    char name[64];
    std::snprintf(name, sizeof(name), "frame_%04zu.obj", i);
    save_obj(frame, (fs::path(out) / name).string());
  }
  json j;
  j["checkpoint"] = checkpoint;
  j["steps"] = steps;
  j["step_energies"] = res.step_energies;
  j["total_energy"] = res.total_energy;
  j["config"] = config_echo(ck.config);
  write_json(j, fs::path(out) / "interpolation.json");
  std::printf("path energy: total %.9g over %d steps\n", res.total_energy, steps);
  return 0;
}

int cmd_extrapolate(const std::string& checkpoint, const std::string& mesh_path, int count,
                    double sigma, std::uint64_t seed, const std::string& out) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  const Mesh mesh = load_obj(mesh_path);
  const ExtrapolationResult res = extrapolate(ck, mesh, mesh.positions(), count, sigma, seed);

  fs::create_directories(out);
  Mesh frame = mesh;
  frame.set_positions(res.reconstruction);
  save_obj(frame, (fs::path(out) / "reconstruction.obj").string());
  for (size_t i = 0; i < res.samples.size(); ++i) {
    frame.set_positions(res.samples[i]);
    char name[64];
    std::snprintf(name, sizeof(name), "sample_%04zu.obj", i);
    save_obj(frame, (fs::path(out) / name).string());
  }
  json j;
  j["checkpoint"] = checkpoint;
  j["sigma"] = sigma;
  j["count"] = count;
  j["seed"] = seed;
  j["sample_energies"] = res.sample_energies;
  j["config"] = config_echo(ck.config);
  write_json(j, fs::path(out) / "extrapolation.json");
  for (size_t i = 0; i < res.sample_energies.size(); ++i)
    std::printf("sample %zu: arap energy vs reconstruction %.9g\n", i, res.sample_energies[i]);
  return 0;
}

int cmd_gradcheck(const GradcheckOptions& opts) {
  const auto results = run_gradcheck(opts);
  for (const auto& r : results)
    std::printf("%-22s %-4s observed %.3e  tol %.3e\n", r.name.c_str(),
                r.pass ? "ok" : "FAIL", r.observed, r.tolerance);
  const bool ok = all_passed(results);
  std::printf("gradcheck: %s\n", ok ? "all checks passed" : "FAILURES PRESENT");
  return ok ? 0 : 1;
}

int cmd_hessian(const std::string& mesh_path, const std::string& jacobian_path, bool cotan) {
  Mesh mesh = load_obj(mesh_path);
  if (cotan) mesh = cotangent_weights(mesh);
  const ArapHessian h = assemble_hessian(mesh);

  const auto rep = null_space_report(h, mesh);
  std::printf("vertices %d  edges %d  weights %s\n", mesh.vertex_count(), mesh.edge_count(),
              cotan ? "cotangent" : "uniform");
  std::printf("kernel count (eig < 1e-8 * max): %d   max eigenvalue %.9g\n", rep.kernel_count,
              rep.max_eigenvalue);
  for (int a = 0; a < 3; ++a)
    std::printf("|H t_%d| = %.3e   |H r_%d| = %.3e\n", a, rep.translation_residuals[a], a,
                rep.rotation_residuals[a]);

  if (!jacobian_path.empty()) {
    std::ifstream in(jacobian_path);
    if (!in) throw std::runtime_error("cannot open '" + jacobian_path + "'");
    json j;
    in >> j;
    const auto& rows = j.is_object() ? j.at("matrix") : j;
    Eigen::MatrixXd jac(rows.size(), rows.at(0).size());
    for (size_t r = 0; r < rows.size(); ++r)
      for (size_t c = 0; c < rows[r].size(); ++c) jac(r, c) = rows[r][c].get<double>();
    const ReducedHessian red = reduce(h, jac);
    const Spectrum spec = eigdecompose(red);
    std::printf("reduced spectrum:");
    for (int i = 0; i < spec.eigenvalues.size(); ++i) std::printf(" %.9g", spec.eigenvalues[i]);
    std::printf("\ntrace %.9g   robust (alpha=0.5) %.9g\n", l2_regularizer(red),
                robust_regularizer(spec, 0.5));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ARAP-regularized mesh generator toolkit"};
  app.require_subcommand(1);

  // gen-dataset
  auto* gen = app.add_subcommand("gen-dataset", "generate a synthetic bending-bar dataset");
  BendingBarSpec spec;
  std::string gen_out, family = "bending_bar";
  gen->add_option("--family", family, "synthetic family")->check(CLI::IsMember({"bending_bar"}));
  gen->add_option("--segments", spec.segments);
  gen->add_option("--rings", spec.ring_vertices);
  gen->add_option("--count", spec.count);
  gen->add_option("--seed", spec.seed);
  gen->add_option("--bend-min", spec.bend_min);
  gen->add_option("--bend-max", spec.bend_max);
  gen->add_option("--length-min", spec.length_min);
  gen->add_option("--length-max", spec.length_max);
  gen->add_option("--radius-min", spec.radius_min);
  gen->add_option("--radius-max", spec.radius_max);
  gen->add_option("--base-length", spec.base_length);
  gen->add_option("--base-radius", spec.base_radius);
  gen->add_option("--out", gen_out, "output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "auto-decoder training");
  std::string train_dataset, train_config, train_out;
  std::uint64_t train_seed = 0;
  bool train_seed_set = false;
  train->add_option("--dataset", train_dataset)->required();
  train->add_option("--config", train_config, "TrainConfig JSON");
  train->add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t v) { train_seed = v; train_seed_set = true; });
  train->add_option("--out", train_out)->required();

  // eval
  auto* eval = app.add_subcommand("eval", "reconstruction evaluation via latent refinement");
  std::string eval_ck, eval_dataset, eval_out;
  eval->add_option("--checkpoint", eval_ck)->required();
  eval->add_option("--dataset", eval_dataset)->required();
  eval->add_option("--out", eval_out);

  // interpolate
  auto* interp = app.add_subcommand("interpolate", "latent-space interpolation with ARAP profiling");
  std::string in_ck, mesh_a, mesh_b, in_out;
  int steps = 10;
  interp->add_option("--checkpoint", in_ck)->required();
  interp->add_option("--mesh-a", mesh_a)->required();
  interp->add_option("--mesh-b", mesh_b)->required();
  interp->add_option("--steps", steps)->check(CLI::Range(2, 100000));
  interp->add_option("--out", in_out)->required();

  // extrapolate
  auto* extrap = app.add_subcommand("extrapolate", "latent-space sampling around a shape");
  std::string ex_ck, ex_mesh, ex_out;
  int ex_count = 5;
  double ex_sigma = 0.2;
  std::uint64_t ex_seed = 0;
  extrap->add_option("--checkpoint", ex_ck)->required();
  extrap->add_option("--mesh", ex_mesh)->required();
  extrap->add_option("--count", ex_count)->check(CLI::Range(1, 100000));
  extrap->add_option("--sigma", ex_sigma);
  extrap->add_option("--seed", ex_seed);
  extrap->add_option("--out", ex_out)->required();

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "run the full gradient/identity oracle suite");
  GradcheckOptions gc_opts;
  std::string gc_config;
  gc->add_option("--config", gc_config, "TrainConfig JSON (seed and latent_dim are used)");
  gc->add_option("--seed", gc_opts.seed);
  gc->add_option("--latent-dim", gc_opts.latent_dim)->check(CLI::Range(1, 64));
  bool inject_dd = false;
  gc->add_flag("--inject-dd-sign-error", inject_dd,
               "fault-injection hook: flip the dD term sign")
      ->group("");  // hidden test hook

  // hessian
  auto* hess = app.add_subcommand("hessian", "ARAP Hessian diagnostics for a mesh");
  std::string h_mesh, h_jac, h_weights = "uniform";
  hess->add_option("--mesh", h_mesh)->required();
  hess->add_option("--jacobian", h_jac, "JSON 3n x k matrix");
  hess->add_option("--weights", h_weights)->check(CLI::IsMember({"uniform", "cotan"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_dataset(spec, gen_out);
    if (train->parsed()) {
      TrainConfig cfg = train_config.empty() ? TrainConfig{} : train_config_from_json_file(train_config);
      if (train_seed_set) cfg.seed = train_seed;
      return cmd_train(train_dataset, cfg, train_out);
    }
    if (eval->parsed()) return cmd_eval(eval_ck, eval_dataset, eval_out);
    if (interp->parsed()) return cmd_interpolate(in_ck, mesh_a, mesh_b, steps, in_out);
    if (extrap->parsed()) return cmd_extrapolate(ex_ck, ex_mesh, ex_count, ex_sigma, ex_seed, ex_out);
    if (gc->parsed()) {
      if (!gc_config.empty()) {
        const TrainConfig cfg = train_config_from_json_file(gc_config);
        gc_opts.seed = cfg.seed;
        gc_opts.latent_dim = cfg.latent_dim;
      }
      if (inject_dd) gc_opts.dd_term_scale = -1.0;
      return cmd_gradcheck(gc_opts);
    }
    if (hess->parsed()) return cmd_hessian(h_mesh, h_jac, h_weights == "cotan");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
