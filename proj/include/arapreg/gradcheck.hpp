#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace arapreg {

struct GradcheckOptions {
  std::uint64_t seed = 0;
  int latent_dim = 4;      // k = 1 must also run
  double dd_term_scale = 1.0;  // fault-injection hook: -1 flips the dD term
};

struct CheckResult {
  std::string name;
  double observed = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// The oracle matrix: Taylor agreement of the ARAP Hessian, the Appendix
// identities (A-form, dD quadratic form, Schur lemma, Rodrigues remainder,
// eigenvalue differential), and finite-difference gates for every VJP and
// assembled loss gradient.
std::vector<CheckResult> run_gradcheck(const GradcheckOptions& opts);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace arapreg
