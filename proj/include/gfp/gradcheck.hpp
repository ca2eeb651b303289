#pragma once
#include <functional>
#include <string>
#include <vector>

#include "gfp/mlp.hpp"

namespace gfp {

// A differentiable scalar objective over a ParamSet. loss() must be a pure
// function of the parameters; grad() returns the analytic gradient.
struct GradCheckProblem {
  std::string name;
  ParamSet params;
  std::function<double(const ParamSet&)> loss;
  std::function<ParamSet(const ParamSet&)> grad;
};

struct GradCheckReport {
  struct Entry {
    std::string problem;
    std::string layer;  // e.g. "layer0.W"
    double max_rel_err;
  };
  std::vector<Entry> entries;
  double max_rel_err = 0.0;
  bool passed = false;
  double tolerance = 0.0;
};

// Central finite differences with h = 1e-6 * (1 + |p|) per parameter. Errors
// are normalized per layer: max absolute deviation over the layer divided by
// max(inf-norm(analytic), inf-norm(numeric), 1e-8) — per-entry denominators
// would amplify finite-difference noise on near-zero entries into spurious
// failures.
GradCheckReport grad_check(const std::vector<GradCheckProblem>& problems, double tolerance);

// The standard battery covering every network shape the engine trains, plus
// a composed actor-style objective that differentiates through the critic.
std::vector<GradCheckProblem> standard_gradcheck_problems(uint64_t seed);

}  // namespace gfp
