#include "gfp/trainer.hpp"

namespace gfp {

EvalReport evaluate_custom_policy(
    const EnvSpec& env, const OracleResult& oracle,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, Rng&)>& policy, int episodes,
    uint64_t seed, long long eval_ordinal) {
  if (episodes < 1) throw ConfigError("evaluation needs at least one episode");
  if (eval_ordinal < 0) throw std::invalid_argument("eval_ordinal must be >= 0");
  double total = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    // Pre-assigned per-episode stream: results are independent of episode
    // execution order.
    Rng rng(seed, kEvalStreamBase + uint64_t(eval_ordinal) * kEvalStreamStride + uint64_t(ep));
    Eigen::VectorXd s_raw = env_reset(env, rng);
    double ep_return = 0.0;  // undiscounted
    for (int t = 0; t < env.horizon; ++t) {
      StepResult res = env_step(env, s_raw, policy(s_raw, rng));
      ep_return += res.reward;
      if (res.terminal) break;
      s_raw = res.s_next;
    }
    total += ep_return;
  }
  EvalReport rep;
  rep.mean_return = total / episodes;
  rep.score = normalize_score(rep.mean_return, oracle);
  return rep;
}

EvalReport Trainer::evaluate(PolicyKind kind, int episodes, long long eval_ordinal) const {
  return evaluate_seeded(kind, episodes, cfg_.seed, eval_ordinal);
}

EvalReport Trainer::evaluate_seeded(PolicyKind kind, int episodes, uint64_t seed,
                                    long long eval_ordinal) const {
  const int d = env_.action_dim;
  auto policy = [this, kind, d](const Eigen::VectorXd& s_raw, Rng& rng) -> Eigen::VectorXd {
    Eigen::MatrixXd s_norm = normalize_state(ds_, s_raw);
    Eigen::MatrixXd z = rng.normal_matrix(d, 1);
    Eigen::MatrixXd a = kind == PolicyKind::Actor ? actor_sample(actor_, s_norm, z)
                                                  : integrate(flow_, s_norm, z);
    return a.col(0);
  };
  return evaluate_custom_policy(env_, oracle(), policy, episodes, seed, eval_ordinal);
}

}  // namespace gfp
