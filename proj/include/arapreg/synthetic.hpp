#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arapreg/mesh.hpp"

namespace arapreg {

// Procedural bending-bar family. A bar is an open tube of `segments` + 1
// rings with `ring_vertices` vertices each, centered at the origin. The
// pose parameter bends the centerline into a circular arc (a near-isometry
// of the thin tube); the shape parameters rescale length and radius.
struct BendingBarSpec {
  int segments = 24;
  int ring_vertices = 8;
  double base_length = 2.0;
  double base_radius = 0.04;
  double bend_min = -0.9, bend_max = 0.9;        // radians of total turning
  double length_min = 0.9, length_max = 1.1;     // length scale
  double radius_min = 0.8, radius_max = 1.2;     // radius scale
  int count = 50;
  std::uint64_t seed = 0;
};

struct BarParameters {
  double bend = 0.0;
  double length_scale = 1.0;
  double radius_scale = 1.0;
};

std::vector<Eigen::Vector3d> bending_bar_vertices(const BendingBarSpec& spec,
                                                  const BarParameters& p);
std::vector<std::array<int, 3>> bending_bar_faces(int segments, int ring_vertices);
Mesh bending_bar_mesh(const BendingBarSpec& spec, const BarParameters& p);

struct SyntheticSample {
  std::string filename;
  BarParameters parameters;
};

// Writes numbered OBJ files plus manifest.json with the ground-truth
// (pose, shape) parameters per sample.
std::vector<SyntheticSample> generate_bar_dataset(const BendingBarSpec& spec,
                                                  const std::string& outdir);

// Loads every sample listed in <dir>/manifest.json, in manifest order.
std::vector<Mesh> load_dataset(const std::string& dir);

}  // namespace arapreg
