#pragma once
#include <string>

#include <Eigen/Core>

#include "gfp/rng.hpp"

namespace gfp {

enum class EnvId { LineReach, TwoGoal, BanditBimodal };

struct EnvSpec {
  EnvId id = EnvId::LineReach;
  std::string name;
  int state_dim = 1;
  int action_dim = 1;
  int horizon = 1;
  double gamma_default = 0.99;
};

// Throws on an unknown env id string.
EnvSpec env_spec(const std::string& env_id);

Eigen::VectorXd env_reset(const EnvSpec& spec, Rng& rng);

struct StepResult {
  Eigen::VectorXd s_next;
  double reward = 0.0;
  bool terminal = false;
};
// Clips the action internally (the authoritative clip).
StepResult env_step(const EnvSpec& spec, const Eigen::VectorXd& s, const Eigen::VectorXd& a);

// The deterministic shortest-path action toward the high-reward goal, and —
// for the multimodal environments — toward the low-reward mode. Both are
// behavior-policy building blocks and evaluation references.
Eigen::VectorXd greedy_action(const EnvSpec& spec, const Eigen::VectorXd& s);
Eigen::VectorXd low_mode_action(const EnvSpec& spec, const Eigen::VectorXd& s);
bool has_low_mode(const EnvSpec& spec);

// The bandit's reward curve over a scalar action, shared with the oracle.
double bandit_reward(double a);

}  // namespace gfp
