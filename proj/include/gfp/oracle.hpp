#pragma once
#include <functional>
#include <vector>

#include "gfp/env.hpp"

namespace gfp {

struct OracleResult {
  double j_opt = 0.0;   // optimal expected discounted return from the start distribution
  double j_rand = 0.0;  // uniform-random policy expected discounted return
};

// Brute force, independent of the learned machinery:
//   line-reach / two-goal — value iteration on a 201-states-per-dim grid
//   with 41 actions per dim, iterated to sup-norm change < 1e-9; J_rand by
//   a 10^5-episode Monte Carlo of the uniform policy (fixed internal seed).
//   bandit-bimodal — 10^5-point action grid: J_opt its max, J_rand its mean.
OracleResult oracle_solve(const EnvSpec& spec, double gamma);

// 100 * (J - J_rand) / (J_opt - J_rand); rejects a degenerate oracle.
double normalize_score(double j, const OracleResult& oracle);

// Value-iteration machinery for line-reach, exposed for the critic's
// oracle-equivalence test: evaluates a deterministic policy s -> a on the
// state grid and interpolates Q^pi(s, a) = r + gamma * (1-terminal) * V^pi(s').
struct LineReachPolicyValue {
  std::vector<double> states;  // the 201-point grid
  std::vector<double> values;  // V^pi at grid points
  double gamma = 0.99;

  double value_at(double s) const;               // nearest-grid-point lookup
  double q_at(double s, double a) const;         // one exact env step + V^pi
};
LineReachPolicyValue line_reach_policy_value(const std::function<double(double)>& policy,
                                             double gamma);

}  // namespace gfp
