#include "gfp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gfp {

namespace {
constexpr int kStatesPerDim = 201;   // [-1, 1] step 0.01
constexpr int kActionsPerDim = 41;   // [-1, 1] step 0.05
constexpr double kSupTol = 1e-9;
constexpr int kMaxSweeps = 20000;
constexpr int kMcEpisodes = 100000;
constexpr int kBanditGrid = 100000;
constexpr uint64_t kOracleSeed = 0x0AC1E5EEDULL;

double grid_state(int i) { return -1.0 + 0.01 * i; }
int snap_index(double x) {
  const int i = static_cast<int>(std::lround((std::clamp(x, -1.0, 1.0) + 1.0) / 0.01));
  return std::clamp(i, 0, kStatesPerDim - 1);
}
double grid_action(int j) { return -1.0 + 0.05 * j; }

// Discounted Monte Carlo of the uniform-random policy on the real env.
double mc_uniform_return(const EnvSpec& spec, double gamma) {
  Rng rng(kOracleSeed, 0);
  double total = 0.0;
  Eigen::VectorXd a(spec.action_dim);
  for (int ep = 0; ep < kMcEpisodes; ++ep) {
    Eigen::VectorXd s = env_reset(spec, rng);
    double disc = 1.0;
    for (int t = 0; t < spec.horizon; ++t) {
      for (int d = 0; d < spec.action_dim; ++d) a[d] = rng.uniform(-1.0, 1.0);
      const StepResult res = env_step(spec, s, a);
      total += disc * res.reward;
      if (res.terminal) break;
      disc *= gamma;
      s = res.s_next;
    }
  }
  return total / kMcEpisodes;
}

double solve_line_reach(double gamma) {
  const EnvSpec spec = env_spec("line-reach");
  // Precompute transitions: 0.2 * a_j lands exactly on the 0.01 state grid.
  struct Tr {
    int next;
    double r;
    bool terminal;
  };
  std::vector<Tr> tr(kStatesPerDim * kActionsPerDim);
  for (int i = 0; i < kStatesPerDim; ++i) {
    Eigen::VectorXd s = Eigen::VectorXd::Constant(1, grid_state(i));
    for (int j = 0; j < kActionsPerDim; ++j) {
      const StepResult res = env_step(spec, s, Eigen::VectorXd::Constant(1, grid_action(j)));
      tr[i * kActionsPerDim + j] = {snap_index(res.s_next[0]), res.reward, res.terminal};
    }
  }
  std::vector<double> v(kStatesPerDim, 0.0), v2(kStatesPerDim, 0.0);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double sup = 0.0;
    for (int i = 0; i < kStatesPerDim; ++i) {
      double best = -1e300;
      for (int j = 0; j < kActionsPerDim; ++j) {
        const Tr& t = tr[i * kActionsPerDim + j];
        const double val = t.r + (t.terminal ? 0.0 : gamma * v[t.next]);
        best = std::max(best, val);
      }
      v2[i] = best;
      sup = std::max(sup, std::abs(best - v[i]));
    }
    v.swap(v2);
    if (sup < kSupTol) break;
  }
  return v[snap_index(-1.0)];
}

double solve_two_goal(double gamma) {
  const EnvSpec spec = env_spec("two-goal");
  // Per-dimension reachable grid indices (shared by x and y: same dynamics).
  std::vector<std::vector<int>> reach(kStatesPerDim);
  for (int i = 0; i < kStatesPerDim; ++i) {
    std::vector<int> r;
    r.reserve(kActionsPerDim);
    for (int j = 0; j < kActionsPerDim; ++j)
      r.push_back(snap_index(grid_state(i) + 0.15 * grid_action(j)));
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    reach[i] = std::move(r);
  }
  // Landing reward/terminal depend only on the landing state.
  const int n2 = kStatesPerDim * kStatesPerDim;
  std::vector<double> r_land(n2);
  std::vector<uint8_t> term(n2);
  for (int x = 0; x < kStatesPerDim; ++x)
    for (int y = 0; y < kStatesPerDim; ++y) {
      const double dx_hi = grid_state(x) - 0.8, dy_hi = grid_state(y) - 0.8;
      const double dx_lo = grid_state(x) + 0.8, dy_lo = grid_state(y) - 0.8;
      const bool hi = dx_hi * dx_hi + dy_hi * dy_hi <= 0.1 * 0.1 + 1e-12;
      const bool lo = dx_lo * dx_lo + dy_lo * dy_lo <= 0.1 * 0.1 + 1e-12;
      r_land[x * kStatesPerDim + y] = hi ? 1.0 : (lo ? 0.3 : 0.0);
      term[x * kStatesPerDim + y] = hi || lo;
    }

  std::vector<double> v(n2, 0.0), w(n2), m1(n2), v2(n2);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    // W(s') = r(s') + gamma * (1 - terminal) * V(s')
    for (int k = 0; k < n2; ++k) w[k] = r_land[k] + (term[k] ? 0.0 : gamma * v[k]);
    // M1(x', py) = max over reachable y' of W(x', y')
    for (int xp = 0; xp < kStatesPerDim; ++xp) {
      const double* wrow = &w[xp * kStatesPerDim];
      double* mrow = &m1[xp * kStatesPerDim];
      for (int py = 0; py < kStatesPerDim; ++py) {
        double best = -1e300;
        for (int yp : reach[py]) best = std::max(best, wrow[yp]);
        mrow[py] = best;
      }
    }
    // V(px, py) = max over reachable x' of M1(x', py)
    double sup = 0.0;
    for (int px = 0; px < kStatesPerDim; ++px)
      for (int py = 0; py < kStatesPerDim; ++py) {
        double best = -1e300;
        for (int xp : reach[px]) best = std::max(best, m1[xp * kStatesPerDim + py]);
        v2[px * kStatesPerDim + py] = best;
        sup = std::max(sup, std::abs(best - v[px * kStatesPerDim + py]));
      }
    v.swap(v2);
    if (sup < kSupTol) break;
  }
  // Start distribution: uniform over [-0.1, 0.1]^2 — averaged on its grid points.
  double total = 0.0;
  int count = 0;
  for (int px = snap_index(-0.1); px <= snap_index(0.1); ++px)
    for (int py = snap_index(-0.1); py <= snap_index(0.1); ++py) {
      total += v[px * kStatesPerDim + py];
      ++count;
    }
  return total / count;
}

}  // namespace

OracleResult oracle_solve(const EnvSpec& spec, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("oracle_solve: gamma must lie in (0,1)");
  OracleResult out;
  switch (spec.id) {
    case EnvId::BanditBimodal: {
      double best = -1e300, total = 0.0;
      for (int k = 0; k < kBanditGrid; ++k) {
        const double a = -1.0 + 2.0 * k / (kBanditGrid - 1);
        const double r = bandit_reward(a);
        best = std::max(best, r);
        total += r;
      }
      out.j_opt = best;
      out.j_rand = total / kBanditGrid;
      break;
    }
    case EnvId::LineReach:
      out.j_opt = solve_line_reach(gamma);
      out.j_rand = mc_uniform_return(spec, gamma);
      break;
    case EnvId::TwoGoal:
      out.j_opt = solve_two_goal(gamma);
      out.j_rand = mc_uniform_return(spec, gamma);
      break;
  }
  return out;
}

double normalize_score(double j, const OracleResult& oracle) {
  const double span = oracle.j_opt - oracle.j_rand;
  if (!(span > 1e-12))
    throw std::invalid_argument("normalize_score: degenerate oracle (J_opt <= J_rand)");
  return 100.0 * (j - oracle.j_rand) / span;
}

double LineReachPolicyValue::value_at(double s) const {
  return values[static_cast<size_t>(snap_index(s))];
}

double LineReachPolicyValue::q_at(double s, double a) const {
  const EnvSpec spec = env_spec("line-reach");
  const StepResult res = env_step(spec, Eigen::VectorXd::Constant(1, s),
                                  Eigen::VectorXd::Constant(1, a));
  return res.reward + (res.terminal ? 0.0 : gamma * value_at(res.s_next[0]));
}

LineReachPolicyValue line_reach_policy_value(const std::function<double(double)>& policy,
                                             double gamma) {
  const EnvSpec spec = env_spec("line-reach");
  LineReachPolicyValue out;
  out.gamma = gamma;
  out.states.resize(kStatesPerDim);
  for (int i = 0; i < kStatesPerDim; ++i) out.states[static_cast<size_t>(i)] = grid_state(i);

  struct Tr {
    int next;
    double r;
    bool terminal;
  };
  std::vector<Tr> tr(kStatesPerDim);
  for (int i = 0; i < kStatesPerDim; ++i) {
    const double s = grid_state(i);
    const StepResult res = env_step(spec, Eigen::VectorXd::Constant(1, s),
                                    Eigen::VectorXd::Constant(1, policy(s)));
    tr[static_cast<size_t>(i)] = {snap_index(res.s_next[0]), res.reward, res.terminal};
  }
  std::vector<double> v(kStatesPerDim, 0.0), v2(kStatesPerDim);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double sup = 0.0;
    for (int i = 0; i < kStatesPerDim; ++i) {
      const Tr& t = tr[static_cast<size_t>(i)];
      // Self-transition with no reward is an absorbing zero-value loop.
      const double val = t.r + (t.terminal ? 0.0 : gamma * v[static_cast<size_t>(t.next)]);
      v2[static_cast<size_t>(i)] = val;
      sup = std::max(sup, std::abs(val - v[static_cast<size_t>(i)]));
    }
    v.swap(v2);
    if (sup < kSupTol) break;
  }
  out.values = std::move(v);
  return out;
}

}  // namespace gfp
