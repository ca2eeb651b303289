#include <cmath>

#include <doctest.h>

#include "gfp/gradcheck.hpp"
#include "gfp/mlp.hpp"
#include "gfp/rng.hpp"

using namespace gfp;

namespace {

// Quadratic objective 0.5 * ||W||^2 over a single-layer net: the analytic
// gradient is W itself, so a deliberate corruption is easy to stage.
GradCheckProblem quadratic_problem(bool corrupt) {
  MlpSpec spec;
  spec.input_dim = 2;
  spec.hidden_dims = {3};
  spec.output_dim = 1;
  Rng rng(11, 0);
  GradCheckProblem prob;
  prob.name = corrupt ? "quadratic-corrupt" : "quadratic";
  prob.params = init_params(spec, rng);
  prob.loss = [](const ParamSet& p) {
    double acc = 0.0;
    for (const auto& l : p.layers) {
      acc += 0.5 * l.W.squaredNorm() + 0.5 * l.b.squaredNorm();
      acc += 0.5 * l.ln_gain.squaredNorm() + 0.5 * l.ln_offset.squaredNorm();
    }
    return acc;
  };
  prob.grad = [corrupt](const ParamSet& p) {
    ParamSet g = p;
    if (corrupt) g.layers[0].W(0, 0) += 1.0;
    return g;
  };
  return prob;
}

}  // namespace

TEST_CASE("a correct analytic gradient passes at 1e-4") {
  GradCheckReport rep = grad_check({quadratic_problem(false)}, 1e-4);
  CHECK(rep.passed);
  CHECK(rep.max_rel_err < 1e-6);
  CHECK(rep.tolerance == 1e-4);
  CHECK(!rep.entries.empty());
}

TEST_CASE("a corrupted gradient entry is caught and attributed to its layer") {
  GradCheckReport rep = grad_check({quadratic_problem(true)}, 1e-4);
  CHECK(!rep.passed);
  CHECK(rep.max_rel_err > 1e-2);
  bool found = false;
  for (const auto& e : rep.entries) {
    if (e.problem == "quadratic-corrupt" && e.layer == "layer0" && e.max_rel_err > 1e-2)
      found = true;
  }
  CHECK(found);
}

TEST_CASE("report entries cover every layer of every problem") {
  GradCheckReport rep = grad_check({quadratic_problem(false)}, 1e-4);
  // The spec {2 -> 3 -> 1} has two layers; errors aggregate per layer.
  REQUIRE(rep.entries.size() == 2);
  CHECK(rep.entries[0].layer == "layer0");
  CHECK(rep.entries[1].layer == "layer1");
}

TEST_CASE("the standard battery passes at 1e-4") {
  auto problems = standard_gradcheck_problems(123);
  REQUIRE(!problems.empty());
  GradCheckReport rep = grad_check(problems, 1e-4);
  for (const auto& e : rep.entries) {
    CAPTURE(e.problem);
    CAPTURE(e.layer);
    CHECK(e.max_rel_err < 1e-4);
  }
  CHECK(rep.passed);
}

TEST_CASE("the standard battery is deterministic per seed") {
  auto a = standard_gradcheck_problems(7);
  auto b = standard_gradcheck_problems(7);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(a[i].loss(a[i].params) == b[i].loss(b[i].params));
  }
}
