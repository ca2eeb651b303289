#include "gfp/actor.hpp"

#include <cmath>
#include <stdexcept>

namespace gfp {

void Actor::validate() const {
  spec.validate();
  if (alpha < 0.0) throw std::invalid_argument("Actor: alpha must be >= 0");
  if (spec.time_embed_dim != 0)
    throw std::invalid_argument("Actor: one-step actor takes no time input");
}

Actor make_actor(int state_dim, int action_dim, const std::vector<int>& hidden_dims, double alpha,
                 Rng& rng) {
  Actor a;
  a.spec.input_dim = state_dim + action_dim;
  a.spec.hidden_dims = hidden_dims;
  a.spec.output_dim = action_dim;
  a.spec.use_layer_norm = false;
  a.spec.time_embed_dim = 0;
  a.alpha = alpha;
  a.params = init_params(a.spec, rng);
  a.validate();
  return a;
}

namespace {
Eigen::MatrixXd stack_sz(const Actor& actor, const Eigen::MatrixXd& s, const Eigen::MatrixXd& z) {
  if (s.cols() != z.cols() || s.rows() + z.rows() != actor.spec.input_dim ||
      z.rows() != actor.spec.output_dim)
    throw std::invalid_argument("actor: state/noise shapes do not match the spec");
  Eigen::MatrixXd in(actor.spec.input_dim, s.cols());
  in.topRows(s.rows()) = s;
  in.bottomRows(z.rows()) = z;
  return in;
}
}  // namespace

Eigen::MatrixXd actor_forward_raw(const Actor& actor, const Eigen::MatrixXd& s,
                                  const Eigen::MatrixXd& z, ForwardCache* cache) {
  return mlp_forward(actor.spec, actor.params, stack_sz(actor, s, z), nullptr, cache);
}

Eigen::MatrixXd actor_sample(const Actor& actor, const Eigen::MatrixXd& s,
                             const Eigen::MatrixXd& z) {
  return actor_forward_raw(actor, s, z).cwiseMax(-1.0).cwiseMin(1.0);
}

ActorLossResult actor_loss(const Actor& actor, const CriticEnsemble& critic,
                           const Eigen::MatrixXd& s, const Eigen::MatrixXd& z,
                           const Eigen::MatrixXd& flow_target, double lambda, bool include_q) {
  const Eigen::Index b = s.cols();
  if (flow_target.cols() != b || flow_target.rows() != actor.spec.output_dim)
    throw std::invalid_argument("actor_loss: flow target shape mismatch");

  ForwardCache cache;
  const Eigen::MatrixXd a_raw = actor_forward_raw(actor, s, z, &cache);

  ActorLossResult out;
  Eigen::MatrixXd dA = Eigen::MatrixXd::Zero(a_raw.rows(), b);
  if (include_q) {
    const Eigen::VectorXd scale = Eigen::VectorXd::Constant(b, -lambda / static_cast<double>(b));
    const QActionGradResult qres = q_eval_with_action_grad(critic, s, a_raw, scale);
    const Eigen::VectorXd qa = q_agg(qres.q1, qres.q2, critic.aggregation);
    out.loss += -lambda * qa.mean();
    dA += qres.dA;
  }
  const Eigen::MatrixXd diff = a_raw - flow_target;
  double sq = 0.0;
  for (Eigen::Index c = 0; c < b; ++c) sq += diff.col(c).squaredNorm();
  out.loss += actor.alpha * sq / static_cast<double>(b);
  dA += (2.0 * actor.alpha / static_cast<double>(b)) * diff;

  out.grads = mlp_backward(actor.spec, actor.params, cache, dA);
  return out;
}

double actor_update(Actor& actor, const CriticEnsemble& critic, const FlowPolicy& flow,
                    const Eigen::MatrixXd& s, const Eigen::MatrixXd& z, double lambda,
                    bool include_q, AdamState& adam) {
  const Eigen::MatrixXd flow_target = integrate(flow, s, z);
  ActorLossResult lr = actor_loss(actor, critic, s, z, flow_target, lambda, include_q);
  if (!std::isfinite(lr.loss)) throw std::runtime_error("actor_update: non-finite loss");
  adam_step(actor.params, lr.grads, adam);
  return lr.loss;
}

}  // namespace gfp
