#include "gfp/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gfp {

namespace {
constexpr double kLineStep = 0.2;
constexpr double kLineGoal = 0.8;
constexpr double kLineBand = 0.05;
constexpr double kTwoGoalStep = 0.15;
constexpr double kGoalRadius = 0.1;
constexpr double kHighGoal[2] = {0.8, 0.8};
constexpr double kLowGoal[2] = {-0.8, 0.8};
constexpr double kHighReward = 1.0;
constexpr double kLowReward = 0.3;
constexpr double kBanditHighMode = 0.7;
constexpr double kBanditLowMode = -0.5;
constexpr double kBanditHighAmp = 1.0;
constexpr double kBanditLowAmp = 0.4;
constexpr double kBanditWidth = 0.02;

double clip1(double x) { return std::clamp(x, -1.0, 1.0); }
}  // namespace

EnvSpec env_spec(const std::string& env_id) {
  if (env_id == "line-reach") return {EnvId::LineReach, "line-reach", 1, 1, 20, 0.99};
  if (env_id == "two-goal") return {EnvId::TwoGoal, "two-goal", 2, 2, 30, 0.99};
  if (env_id == "bandit-bimodal") return {EnvId::BanditBimodal, "bandit-bimodal", 1, 1, 1, 0.99};
  throw std::invalid_argument("unknown env_id '" + env_id +
                              "' (expected line-reach|two-goal|bandit-bimodal)");
}

Eigen::VectorXd env_reset(const EnvSpec& spec, Rng& rng) {
  Eigen::VectorXd s(spec.state_dim);
  switch (spec.id) {
    case EnvId::LineReach:
      s[0] = -1.0;
      break;
    case EnvId::TwoGoal:
      s[0] = rng.uniform(-0.1, 0.1);
      s[1] = rng.uniform(-0.1, 0.1);
      break;
    case EnvId::BanditBimodal:
      s[0] = 0.0;
      break;
  }
  return s;
}

double bandit_reward(double a) {
  const double dh = a - kBanditHighMode;
  const double dl = a - kBanditLowMode;
  return kBanditHighAmp * std::exp(-dh * dh / kBanditWidth) +
         kBanditLowAmp * std::exp(-dl * dl / kBanditWidth);
}

StepResult env_step(const EnvSpec& spec, const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
  if (s.size() != spec.state_dim || a.size() != spec.action_dim)
    throw std::invalid_argument("env_step: state/action dims do not match the env");
  StepResult out;
  switch (spec.id) {
    case EnvId::LineReach: {
      const double sn = clip1(s[0] + kLineStep * clip1(a[0]));
      out.s_next = Eigen::VectorXd::Constant(1, sn);
      out.reward = std::abs(sn - kLineGoal) <= kLineBand ? 1.0 : 0.0;
      out.terminal = out.reward == 1.0;
      break;
    }
    case EnvId::TwoGoal: {
      Eigen::VectorXd p(2);
      p[0] = clip1(s[0] + kTwoGoalStep * clip1(a[0]));
      p[1] = clip1(s[1] + kTwoGoalStep * clip1(a[1]));
      const double d_hi = std::hypot(p[0] - kHighGoal[0], p[1] - kHighGoal[1]);
      const double d_lo = std::hypot(p[0] - kLowGoal[0], p[1] - kLowGoal[1]);
      out.s_next = p;
      if (d_hi <= kGoalRadius) {
        out.reward = kHighReward;
        out.terminal = true;
      } else if (d_lo <= kGoalRadius) {
        out.reward = kLowReward;
        out.terminal = true;
      }
      break;
    }
    case EnvId::BanditBimodal: {
      out.s_next = Eigen::VectorXd::Zero(1);
      out.reward = bandit_reward(clip1(a[0]));
      out.terminal = true;
      break;
    }
  }
  return out;
}

Eigen::VectorXd greedy_action(const EnvSpec& spec, const Eigen::VectorXd& s) {
  Eigen::VectorXd a(spec.action_dim);
  switch (spec.id) {
    case EnvId::LineReach:
      a[0] = clip1((kLineGoal - s[0]) / kLineStep);
      break;
    case EnvId::TwoGoal:
      a[0] = clip1((kHighGoal[0] - s[0]) / kTwoGoalStep);
      a[1] = clip1((kHighGoal[1] - s[1]) / kTwoGoalStep);
      break;
    case EnvId::BanditBimodal:
      a[0] = kBanditHighMode;
      break;
  }
  return a;
}

Eigen::VectorXd low_mode_action(const EnvSpec& spec, const Eigen::VectorXd& s) {
  Eigen::VectorXd a(spec.action_dim);
  switch (spec.id) {
    case EnvId::TwoGoal:
      a[0] = clip1((kLowGoal[0] - s[0]) / kTwoGoalStep);
      a[1] = clip1((kLowGoal[1] - s[1]) / kTwoGoalStep);
      break;
    case EnvId::BanditBimodal:
      a[0] = kBanditLowMode;
      break;
    case EnvId::LineReach:
      throw std::invalid_argument("line-reach has no low-reward mode");
  }
  return a;
}

bool has_low_mode(const EnvSpec& spec) { return spec.id != EnvId::LineReach; }

}  // namespace gfp
