#include "gfp/critic.hpp"

#include <sstream>
#include <stdexcept>

namespace gfp {

void CriticEnsemble::validate() const {
  spec.validate();
  if (spec.output_dim != 1) throw std::invalid_argument("CriticEnsemble: output_dim must be 1");
  if (!spec.use_layer_norm)
    throw std::invalid_argument("CriticEnsemble: heads must use layer norm");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("CriticEnsemble: gamma must lie in (0,1)");
  if (!(tau > 0.0 && tau <= 1.0))
    throw std::invalid_argument("CriticEnsemble: tau must lie in (0,1]");
}

CriticEnsemble make_critic(int state_dim, int action_dim, const std::vector<int>& hidden_dims,
                           Aggregation agg, double tau, double gamma, Rng& rng) {
  CriticEnsemble ce;
  ce.spec.input_dim = state_dim + action_dim;
  ce.spec.hidden_dims = hidden_dims;
  ce.spec.output_dim = 1;
  ce.spec.use_layer_norm = true;
  ce.spec.time_embed_dim = 0;
  ce.aggregation = agg;
  ce.tau = tau;
  ce.gamma = gamma;
  ce.q1 = init_params(ce.spec, rng);
  ce.q2 = init_params(ce.spec, rng);
  ce.q1_target = ce.q1;
  ce.q2_target = ce.q2;
  ce.validate();
  return ce;
}

namespace {
Eigen::MatrixXd stack_sa(const CriticEnsemble& ce, const Eigen::MatrixXd& s,
                         const Eigen::MatrixXd& a) {
  if (s.cols() != a.cols() || s.rows() + a.rows() != ce.spec.input_dim) {
    std::ostringstream os;
    os << "critic: got state " << s.rows() << "x" << s.cols() << ", action " << a.rows() << "x"
       << a.cols() << " for input_dim " << ce.spec.input_dim;
    throw std::invalid_argument(os.str());
  }
  Eigen::MatrixXd in(ce.spec.input_dim, s.cols());
  in.topRows(s.rows()) = s;
  in.bottomRows(a.rows()) = a;
  return in;
}
}  // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> q_pair_eval(const CriticEnsemble& ce,
                                                        const Eigen::MatrixXd& s,
                                                        const Eigen::MatrixXd& a,
                                                        WhichHeads which) {
  const Eigen::MatrixXd in = stack_sa(ce, s, a);
  const ParamSet& p1 = which == WhichHeads::Online ? ce.q1 : ce.q1_target;
  const ParamSet& p2 = which == WhichHeads::Online ? ce.q2 : ce.q2_target;
  Eigen::VectorXd q1 = mlp_forward(ce.spec, p1, in).row(0);
  Eigen::VectorXd q2 = mlp_forward(ce.spec, p2, in).row(0);
  return {std::move(q1), std::move(q2)};
}

double q_agg(double q1, double q2, Aggregation agg) {
  return agg == Aggregation::Mean ? 0.5 * (q1 + q2) : std::min(q1, q2);
}

Eigen::VectorXd q_agg(const Eigen::VectorXd& q1, const Eigen::VectorXd& q2, Aggregation agg) {
  return agg == Aggregation::Mean ? Eigen::VectorXd(0.5 * (q1 + q2))
                                  : Eigen::VectorXd(q1.cwiseMin(q2));
}

Eigen::VectorXd q_value(const CriticEnsemble& ce, const Eigen::MatrixXd& s,
                        const Eigen::MatrixXd& a, WhichHeads which) {
  auto [q1, q2] = q_pair_eval(ce, s, a, which);
  return q_agg(q1, q2, ce.aggregation);
}

Eigen::VectorXd bellman_target_standard(const CriticEnsemble& ce, const Eigen::VectorXd& r,
                                        const Eigen::MatrixXd& s_next,
                                        const Eigen::VectorXd& terminal,
                                        const Eigen::MatrixXd& a_next) {
  const Eigen::VectorXd qbar = q_value(ce, s_next, a_next, WhichHeads::Target);
  return r.array() + (1.0 - terminal.array()) * ce.gamma * qbar.array();
}

Eigen::VectorXd bellman_target_vabc(const CriticEnsemble& ce, const Eigen::VectorXd& r,
                                    const Eigen::MatrixXd& s_next,
                                    const Eigen::VectorXd& terminal,
                                    const Eigen::MatrixXd& a_next_actor,
                                    const Eigen::MatrixXd& a_next_flow) {
  const Eigen::VectorXd q_actor = q_value(ce, s_next, a_next_actor, WhichHeads::Target);
  const Eigen::VectorXd q_flow = q_value(ce, s_next, a_next_flow, WhichHeads::Target);
  return r.array() +
         (1.0 - terminal.array()) * (0.5 * ce.gamma) * (q_actor.array() + q_flow.array());
}

CriticLossResult critic_loss(const CriticEnsemble& ce, const Eigen::MatrixXd& s,
                             const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd in = stack_sa(ce, s, a);
  if (y.size() != s.cols())
    throw std::invalid_argument("critic_loss: target count does not match batch");
  const double b = static_cast<double>(s.cols());

  CriticLossResult out;
  double loss = 0.0;
  for (const ParamSet* head : {&ce.q1, &ce.q2}) {
    ForwardCache cache;
    const Eigen::MatrixXd q = mlp_forward(ce.spec, *head, in, nullptr, &cache);
    const Eigen::VectorXd err = Eigen::VectorXd(q.row(0)) - y;
    loss += err.squaredNorm() / b;
    Eigen::MatrixXd dq(1, err.size());
    dq.row(0) = (2.0 / b) * err.transpose();
    ParamSet grads = mlp_backward(ce.spec, *head, cache, dq);
    (head == &ce.q1 ? out.grads_q1 : out.grads_q2) = std::move(grads);
  }
  out.loss = loss;
  return out;
}

double critic_update(CriticEnsemble& ce, const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                     const Eigen::VectorXd& y, AdamState& adam_q1, AdamState& adam_q2) {
  CriticLossResult lr = critic_loss(ce, s, a, y);
  if (!std::isfinite(lr.loss))
    throw std::runtime_error("critic_update: non-finite loss (targets or activations diverged)");
  adam_step(ce.q1, lr.grads_q1, adam_q1);
  adam_step(ce.q2, lr.grads_q2, adam_q2);
  polyak_update(ce.q1_target, ce.q1, ce.tau);
  polyak_update(ce.q2_target, ce.q2, ce.tau);
  return lr.loss;
}

void target_sync(CriticEnsemble& ce) {
  ce.q1_target = ce.q1;
  ce.q2_target = ce.q2;
}

QActionGradResult q_eval_with_action_grad(const CriticEnsemble& ce, const Eigen::MatrixXd& s,
                                          const Eigen::MatrixXd& a,
                                          const Eigen::VectorXd& dQ_scale) {
  const Eigen::MatrixXd in = stack_sa(ce, s, a);
  if (dQ_scale.size() != s.cols())
    throw std::invalid_argument("q_eval_with_action_grad: scale count does not match batch");

  ForwardCache c1, c2;
  QActionGradResult out;
  out.q1 = mlp_forward(ce.spec, ce.q1, in, nullptr, &c1).row(0);
  out.q2 = mlp_forward(ce.spec, ce.q2, in, nullptr, &c2).row(0);

  Eigen::MatrixXd d1(1, s.cols()), d2(1, s.cols());
  for (Eigen::Index i = 0; i < s.cols(); ++i) {
    if (ce.aggregation == Aggregation::Mean) {
      d1(0, i) = 0.5 * dQ_scale[i];
      d2(0, i) = 0.5 * dQ_scale[i];
    } else {
      const bool first = out.q1[i] <= out.q2[i];
      d1(0, i) = first ? dQ_scale[i] : 0.0;
      d2(0, i) = first ? 0.0 : dQ_scale[i];
    }
  }
  Eigen::MatrixXd din1, din2;
  (void)mlp_backward(ce.spec, ce.q1, c1, d1, &din1);
  (void)mlp_backward(ce.spec, ce.q2, c2, d2, &din2);
  const Eigen::Index state_rows = s.rows();
  out.dA = din1.bottomRows(in.rows() - state_rows) + din2.bottomRows(in.rows() - state_rows);
  return out;
}

}  // namespace gfp
