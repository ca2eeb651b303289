#pragma once
#include <Eigen/Core>

#include "gfp/adam.hpp"
#include "gfp/critic.hpp"
#include "gfp/flow_policy.hpp"
#include "gfp/mlp.hpp"

namespace gfp {

// One-step actor: a deterministic map (s, z) -> action distilled from the
// flow policy while climbing the critic.
struct Actor {
  MlpSpec spec;  // input = state_dim + action_dim (noise), output = action_dim
  ParamSet params;
  double alpha = 1.0;

  void validate() const;
};

Actor make_actor(int state_dim, int action_dim, const std::vector<int>& hidden_dims, double alpha,
                 Rng& rng);

// Raw network output (no clipping) — the differentiable map the update
// optimizes. Columns are samples.
Eigen::MatrixXd actor_forward_raw(const Actor& actor, const Eigen::MatrixXd& s,
                                  const Eigen::MatrixXd& z, ForwardCache* cache = nullptr);

// The action the policy actually emits: raw output clipped to [-1, 1]^d.
Eigen::MatrixXd actor_sample(const Actor& actor, const Eigen::MatrixXd& s,
                             const Eigen::MatrixXd& z);

// Loss and gradient of
//   mean_i [ -lambda * Q_agg(s_i, mu_theta(s_i, z_i)) * include_q
//            + alpha * ||mu_theta(s_i, z_i) - flow_target_i||^2 ]
// with gradients flowing through the critic's action input. flow_target is
// the gradient-stopped flow-policy action at the same z (clipped, being an
// action); the Q term sees the actor's raw output so the training signal
// never dies against the clip. bc-only mode sets include_q = false.
struct ActorLossResult {
  double loss = 0.0;
  ParamSet grads;
};
ActorLossResult actor_loss(const Actor& actor, const CriticEnsemble& critic,
                           const Eigen::MatrixXd& s, const Eigen::MatrixXd& z,
                           const Eigen::MatrixXd& flow_target, double lambda, bool include_q);

// actor_loss followed by one Adam step on theta. The flow target is computed
// here as integrate(flow, s, z) — the same z that feeds the actor.
double actor_update(Actor& actor, const CriticEnsemble& critic, const FlowPolicy& flow,
                    const Eigen::MatrixXd& s, const Eigen::MatrixXd& z, double lambda,
                    bool include_q, AdamState& adam);

}  // namespace gfp
