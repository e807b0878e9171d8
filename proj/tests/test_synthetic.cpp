#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>

#include "arapreg/synthetic.hpp"
#include "arapreg/gradcheck.hpp"

using namespace arapreg;

namespace {

std::vector<double> sorted_edge_lengths(const Mesh& m) {
  std::vector<double> lengths;
  for (const auto& [i, j] : m.edges)
    lengths.push_back((m.vertices[static_cast<size_t>(i)] - m.vertices[static_cast<size_t>(j)]).norm());
  std::sort(lengths.begin(), lengths.end());
  return lengths;
}

}  // namespace

TEST_CASE("straight bar: congruent rings") {
  BendingBarSpec spec;
  const Mesh m = bending_bar_mesh(spec, BarParameters{});
  const int rv = spec.ring_vertices;
  // every ring is a congruent circle: pairwise in-ring distances repeat
  auto ring_edge = [&](int ring) {
    return (m.vertices[static_cast<size_t>(ring * rv)] - m.vertices[static_cast<size_t>(ring * rv + 1)]).norm();
  };
  for (int r = 1; r <= spec.segments; ++r)
    CHECK(ring_edge(r) == doctest::Approx(ring_edge(0)).epsilon(1e-12));
}

TEST_CASE("bending is a near-isometry on the thin bar") {
  BendingBarSpec spec;
  BarParameters straight, bent;
  bent.bend = 0.4;
  const auto a = sorted_edge_lengths(bending_bar_mesh(spec, straight));
  const auto b = sorted_edge_lengths(bending_bar_mesh(spec, bent));
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i)
    CHECK(std::abs(a[i] - b[i]) <= 0.01 * a[i]);
}

TEST_CASE("radius scaling rescales ring edges by the factor") {
  BendingBarSpec spec;
  BarParameters unit, scaled;
  scaled.radius_scale = 1.17;
  const Mesh a = bending_bar_mesh(spec, unit);
  const Mesh b = bending_bar_mesh(spec, scaled);
  const int rv = spec.ring_vertices;
  for (int r = 0; r <= spec.segments; ++r) {
    for (int v = 0; v < rv; ++v) {
      const int i = r * rv + v;
      const int j = r * rv + (v + 1) % rv;
      const double la = (a.vertices[static_cast<size_t>(i)] - a.vertices[static_cast<size_t>(j)]).norm();
      const double lb = (b.vertices[static_cast<size_t>(i)] - b.vertices[static_cast<size_t>(j)]).norm();
      CHECK(lb == doctest::Approx(1.17 * la).epsilon(1e-9));
    }
  }
}

TEST_CASE("dataset generation round-trips through the manifest") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "arapreg_synth_tests";
  fs::remove_all(dir);
  BendingBarSpec spec;
  spec.segments = 4;
  spec.ring_vertices = 5;
  spec.count = 6;
  spec.seed = 42;
  const auto samples = generate_bar_dataset(spec, dir.string());
  CHECK(samples.size() == 6);
  const auto meshes = load_dataset(dir.string());
  REQUIRE(meshes.size() == 6);
  for (size_t i = 1; i < meshes.size(); ++i) CHECK(meshes[0].same_connectivity(meshes[i]));
  // reproducibility
  const fs::path dir2 = fs::temp_directory_path() / "arapreg_synth_tests2";
  fs::remove_all(dir2);
  const auto samples2 = generate_bar_dataset(spec, dir2.string());
  for (size_t i = 0; i < samples.size(); ++i)
    CHECK(samples[i].parameters.bend == samples2[i].parameters.bend);
}

TEST_CASE("gradcheck suite passes and the fault hook trips the right checks") {
  GradcheckOptions opts;
  const auto results = run_gradcheck(opts);
  for (const auto& r : results) {
    INFO(r.name, " observed=", r.observed, " tol=", r.tolerance);
    CHECK(r.pass);
  }

  GradcheckOptions broken = opts;
  broken.dd_term_scale = -1.0;
  const auto bad = run_gradcheck(broken);
  for (const auto& r : bad) {
    INFO(r.name);
    if (r.name == "dd_form" || r.name == "robust_spectral_grad" || r.name == "arapreg_loss_grad") {
      CHECK_FALSE(r.pass);
    } else {
      CHECK(r.pass);
    }
  }
}

TEST_CASE("gradcheck runs at the minimal latent dimension") {
  GradcheckOptions opts;
  opts.latent_dim = 1;
  const auto results = run_gradcheck(opts);
  CHECK(all_passed(results));
}
