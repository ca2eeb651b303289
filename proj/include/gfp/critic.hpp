#pragma once
#include <utility>

#include <Eigen/Core>

#include "gfp/adam.hpp"
#include "gfp/mlp.hpp"

namespace gfp {

enum class Aggregation { Mean, Min };

enum class WhichHeads { Online, Target };

// Double-Q critic with layer-normalized heads and Polyak-averaged targets.
struct CriticEnsemble {
  MlpSpec spec;  // input = state_dim + action_dim, output 1, layer norm on
  ParamSet q1, q2;
  ParamSet q1_target, q2_target;
  Aggregation aggregation = Aggregation::Mean;
  double tau = 0.005;
  double gamma = 0.99;

  void validate() const;
};

// Targets start as exact copies of the online heads.
CriticEnsemble make_critic(int state_dim, int action_dim, const std::vector<int>& hidden_dims,
                           Aggregation agg, double tau, double gamma, Rng& rng);

std::pair<Eigen::VectorXd, Eigen::VectorXd> q_pair_eval(const CriticEnsemble& ce,
                                                        const Eigen::MatrixXd& s,
                                                        const Eigen::MatrixXd& a,
                                                        WhichHeads which);

double q_agg(double q1, double q2, Aggregation agg);
Eigen::VectorXd q_agg(const Eigen::VectorXd& q1, const Eigen::VectorXd& q2, Aggregation agg);

// Convenience: aggregated online/target Q over a batch.
Eigen::VectorXd q_value(const CriticEnsemble& ce, const Eigen::MatrixXd& s,
                        const Eigen::MatrixXd& a, WhichHeads which);

// y = r + (1 - terminal) * gamma * Qbar(s', a'). The bootstrap action a'
// is supplied by the caller (actor sample under fresh noise, gradient-free).
Eigen::VectorXd bellman_target_standard(const CriticEnsemble& ce, const Eigen::VectorXd& r,
                                        const Eigen::MatrixXd& s_next,
                                        const Eigen::VectorXd& terminal,
                                        const Eigen::MatrixXd& a_next);

// y = r + (1 - terminal) * (gamma/2) * (Qbar(s', a_actor) + Qbar(s', a_flow)),
// the conservative variant averaging the actor and flow bootstrap actions
// sampled at one shared noise draw per row.
Eigen::VectorXd bellman_target_vabc(const CriticEnsemble& ce, const Eigen::VectorXd& r,
                                    const Eigen::MatrixXd& s_next,
                                    const Eigen::VectorXd& terminal,
                                    const Eigen::MatrixXd& a_next_actor,
                                    const Eigen::MatrixXd& a_next_flow);

// Sum-of-both-heads squared error against shared targets y; one Adam step on
// each head, then Polyak on both targets. Returns the loss.
double critic_update(CriticEnsemble& ce, const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                     const Eigen::VectorXd& y, AdamState& adam_q1, AdamState& adam_q2);

// Loss + gradients without applying the update (grad-check entry point).
struct CriticLossResult {
  double loss = 0.0;
  ParamSet grads_q1, grads_q2;
};
CriticLossResult critic_loss(const CriticEnsemble& ce, const Eigen::MatrixXd& s,
                             const Eigen::MatrixXd& a, const Eigen::VectorXd& y);

// Hard copy online -> target.
void target_sync(CriticEnsemble& ce);

// Online-head evaluation plus the gradient of sum_i dQ_scale[i] *
// q_agg_i(s_i, a_i) with respect to each action column, for callers
// differentiating through the critic (the actor update). Min aggregation
// routes each row's gradient through the smaller head (q1 on ties).
struct QActionGradResult {
  Eigen::VectorXd q1, q2;
  Eigen::MatrixXd dA;
};
QActionGradResult q_eval_with_action_grad(const CriticEnsemble& ce, const Eigen::MatrixXd& s,
                                          const Eigen::MatrixXd& a,
                                          const Eigen::VectorXd& dQ_scale);

}  // namespace gfp
