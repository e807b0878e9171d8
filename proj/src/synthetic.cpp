#include "arapreg/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "arapreg/obj_io.hpp"
#include "arapreg/rng.hpp"

namespace arapreg {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<Eigen::Vector3d> bending_bar_vertices(const BendingBarSpec& spec,
                                                  const BarParameters& p) {
  const int rings = spec.segments + 1;
  const double length = spec.base_length * p.length_scale;
  const double radius = spec.base_radius * p.radius_scale;
  const double phi = p.bend;

  std::vector<Eigen::Vector3d> verts;
  verts.reserve(static_cast<size_t>(rings * spec.ring_vertices));
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();

  for (int r = 0; r < rings; ++r) {
    const double t = static_cast<double>(r) / spec.segments - 0.5;  // [-0.5, 0.5]
    const double a = phi * t;
    // circular arc of total turning angle phi and arclength `length`,
    // traced in the xz-plane; straight bar in the phi -> 0 limit
    Eigen::Vector3d center, normal;
    if (std::abs(phi) < 1e-8) {
      center = {length * t, 0.0, 0.0};
      normal = {0.0, 0.0, 1.0};
    } else {
      const double arc_radius = length / phi;
      center = {arc_radius * std::sin(a), 0.0, arc_radius * (1.0 - std::cos(a))};
      normal = {-std::sin(a), 0.0, std::cos(a)};
    }
    for (int v = 0; v < spec.ring_vertices; ++v) {
      const double psi = 2.0 * M_PI * v / spec.ring_vertices;
      const Eigen::Vector3d pos =
          center + radius * (std::cos(psi) * normal + std::sin(psi) * Eigen::Vector3d::UnitY());
      verts.push_back(pos);
      centroid += pos;
    }
  }
  centroid /= static_cast<double>(verts.size());
  for (auto& v : verts) v -= centroid;
  return verts;
}

std::vector<std::array<int, 3>> bending_bar_faces(int segments, int ring_vertices) {
  std::vector<std::array<int, 3>> faces;
  faces.reserve(static_cast<size_t>(2 * segments * ring_vertices));
  for (int r = 0; r < segments; ++r) {
    for (int v = 0; v < ring_vertices; ++v) {
      const int a = r * ring_vertices + v;
      const int b = r * ring_vertices + (v + 1) % ring_vertices;
      const int c = (r + 1) * ring_vertices + v;
      const int d = (r + 1) * ring_vertices + (v + 1) % ring_vertices;
      faces.push_back({a, b, c});
      faces.push_back({b, d, c});
    }
  }
  return faces;
}

Mesh bending_bar_mesh(const BendingBarSpec& spec, const BarParameters& p) {
  return Mesh::build(bending_bar_vertices(spec, p),
                     bending_bar_faces(spec.segments, spec.ring_vertices));
}

std::vector<SyntheticSample> generate_bar_dataset(const BendingBarSpec& spec,
                                                  const std::string& outdir) {
  fs::create_directories(outdir);
  Rng rng(spec.seed);
  std::vector<SyntheticSample> samples;
  json manifest;
  manifest["family"] = "bending_bar";
  manifest["segments"] = spec.segments;
  manifest["ring_vertices"] = spec.ring_vertices;
  manifest["base_length"] = spec.base_length;
  manifest["base_radius"] = spec.base_radius;
  manifest["seed"] = spec.seed;
  json list = json::array();

  for (int i = 0; i < spec.count; ++i) {
    SyntheticSample s;
    s.parameters.bend = rng.uniform_in(spec.bend_min, spec.bend_max);
    s.parameters.length_scale = rng.uniform_in(spec.length_min, spec.length_max);
    s.parameters.radius_scale = rng.uniform_in(spec.radius_min, spec.radius_max);
    char name[64];
    std::snprintf(name, sizeof(name), "bar_%04d.obj", i);
    s.filename = name;
    save_obj(bending_bar_mesh(spec, s.parameters), (fs::path(outdir) / s.filename).string());
    list.push_back(json{{"index", i},
                        {"filename", s.filename},
                        {"bend", s.parameters.bend},
                        {"length_scale", s.parameters.length_scale},
                        {"radius_scale", s.parameters.radius_scale}});
    samples.push_back(std::move(s));
  }
  manifest["samples"] = list;
  std::ofstream out(fs::path(outdir) / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in '" + outdir + "'");
  out << manifest.dump(2) << "\n";
  return samples;
}

std::vector<Mesh> load_dataset(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw std::runtime_error("no manifest.json in '" + dir + "'");
  json manifest;
  in >> manifest;
  std::vector<Mesh> meshes;
  for (const auto& entry : manifest.at("samples"))
    meshes.push_back(load_obj((fs::path(dir) / entry.at("filename").get<std::string>()).string()));
  if (meshes.empty()) throw std::runtime_error("dataset '" + dir + "' is empty");
  return meshes;
}

}  // namespace arapreg
