#include "gfp/trainer.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace gfp {

namespace {

std::string checkpoint_dirname(long long step) {
  std::ostringstream out;
  out << "step_" << std::setw(8) << std::setfill('0') << step;
  return out.str();
}

}  // namespace

Trainer::Trainer(TrainConfig cfg, OfflineDataset ds)
    : cfg_(std::move(cfg)),
      env_(env_spec(cfg_.env_id)),
      ds_(std::move(ds)),
      rng_minibatch_(cfg_.seed, kStreamMinibatch),
      rng_bootstrap_(cfg_.seed, kStreamBootstrapNoise),
      rng_shared_(cfg_.seed, kStreamSharedNoise),
      rng_eps_(cfg_.seed, kStreamFlowEps),
      rng_time_(cfg_.seed, kStreamFlowTime) {
  cfg_.validate();
  if (ds_.env_id != cfg_.env_id) {
    throw ConfigError("dataset env_id '" + ds_.env_id + "' does not match config env_id '" +
                      cfg_.env_id + "'");
  }
  if (ds_.state_dim != env_.state_dim || ds_.action_dim != env_.action_dim) {
    throw ConfigError("dataset dimensions do not match environment '" + cfg_.env_id + "'");
  }
  if (ds_.n < 1) throw ConfigError("dataset is empty");

  // All fresh parameters come off stream 0 in one fixed order.
  Rng init(cfg_.seed, kStreamInit);
  critic_ = make_critic(env_.state_dim, env_.action_dim, cfg_.hidden_dims, cfg_.aggregation,
                        cfg_.tau, cfg_.gamma, init);
  actor_ = make_actor(env_.state_dim, env_.action_dim, cfg_.hidden_dims, cfg_.alpha, init);
  flow_ = make_flow_policy(env_.state_dim, env_.action_dim, cfg_.hidden_dims, cfg_.euler_steps,
                           init);
  if (cfg_.distill_target == DistillTarget::Polyak) flow_distill_target_ = flow_.params;

  adam_q1_ = AdamState::make(critic_.q1, cfg_.learning_rate);
  adam_q2_ = AdamState::make(critic_.q2, cfg_.learning_rate);
  adam_actor_ = AdamState::make(actor_.params, cfg_.learning_rate);
  adam_flow_ = AdamState::make(flow_.params, cfg_.learning_rate);
}

Eigen::VectorXd Trainer::guidance_weights(const Minibatch& mb, const Eigen::MatrixXd& z,
                                          const Eigen::VectorXd& q_actor, double lambda) const {
  const auto n = q_actor.size();
  Eigen::VectorXd g(n);
  const GuidanceConfig& gc = cfg_.guidance;
  switch (gc.mode) {
    case GuidanceMode::None:
    case GuidanceMode::BcOnly:
      g.setOnes();
      return g;
    case GuidanceMode::Softmax: {
      Eigen::VectorXd q_data = q_value(critic_, mb.s, mb.a, WhichHeads::Online);
      for (Eigen::Index i = 0; i < n; ++i) {
        g[i] = guidance_softmax(q_data[i], q_actor[i], lambda, gc.eta);
      }
      return g;
    }
    case GuidanceMode::Awr: {
      Eigen::VectorXd q_data = q_value(critic_, mb.s, mb.a, WhichHeads::Online);
      for (Eigen::Index i = 0; i < n; ++i) {
        g[i] = guidance_awr(q_data[i], q_actor[i], lambda, gc.eta, gc.awr_clip);
      }
      return g;
    }
    case GuidanceMode::Min: {
      Eigen::VectorXd q_data = q_value(critic_, mb.s, mb.a, WhichHeads::Online);
      Eigen::MatrixXd a_flow = integrate(flow_, mb.s, z);  // same shared z as the actor
      Eigen::VectorXd q_flow = q_value(critic_, mb.s, a_flow, WhichHeads::Online);
      for (Eigen::Index i = 0; i < n; ++i) {
        g[i] = guidance_min(q_data[i], q_actor[i], q_flow[i], lambda, gc.eta);
      }
      return g;
    }
  }
  throw std::logic_error("unreachable guidance mode");
}

MetricsRecord Trainer::train_step(StepTrace* trace) {
  const long long this_step = step_ + 1;
  try {
    Minibatch mb = sample_minibatch(ds_, cfg_.batch_size, rng_minibatch_);
    const int d = env_.action_dim;
    const int B = cfg_.batch_size;
    MetricsRecord rec;
    rec.step = this_step;

    // Step 1: critic. Bootstrap actions use fresh noise, one draw per row
    // shared by both bootstrap policies in the conservative variant.
    Eigen::MatrixXd z_next = rng_bootstrap_.normal_matrix(d, B);
    Eigen::MatrixXd a_next_actor = actor_sample(actor_, mb.s_next, z_next);
    Eigen::VectorXd y;
    if (cfg_.bellman_target == BellmanTargetKind::Standard) {
      y = bellman_target_standard(critic_, mb.r, mb.s_next, mb.terminal, a_next_actor);
    } else {
      Eigen::MatrixXd a_next_flow = integrate(flow_, mb.s_next, z_next);
      y = bellman_target_vabc(critic_, mb.r, mb.s_next, mb.terminal, a_next_actor, a_next_flow);
    }
    rec.critic_loss = critic_update(critic_, mb.s, mb.a, y, adam_q1_, adam_q2_);
    if (trace) {
      trace->bellman_targets = y;
      trace->phases.push_back("critic");
    }

    // Step 2: actor. One shared noise draw per row serves the scale estimate,
    // the distillation target, and the guidance weights below.
    Eigen::MatrixXd z = rng_shared_.normal_matrix(d, B);
    Eigen::MatrixXd a_pi = actor_sample(actor_, mb.s, z);
    Eigen::VectorXd q_pi = q_value(critic_, mb.s, a_pi, WhichHeads::Online);
    rec.mean_abs_q = q_pi.cwiseAbs().mean();
    const double lambda = lambda_scale(q_pi, cfg_.guidance.lambda_floor);
    rec.lambda = lambda;
    const bool include_q = cfg_.guidance.mode != GuidanceMode::BcOnly;
    if (cfg_.distill_target == DistillTarget::Polyak) {
      FlowPolicy distill = flow_;
      distill.params = *flow_distill_target_;
      rec.actor_loss = actor_update(actor_, critic_, distill, mb.s, z, lambda, include_q,
                                    adam_actor_);
    } else {
      rec.actor_loss = actor_update(actor_, critic_, flow_, mb.s, z, lambda, include_q,
                                    adam_actor_);
    }
    if (trace) trace->phases.push_back("actor");

    // Step 3: flow, weighted by the guidance signal at the pre-update nets.
    Eigen::VectorXd g = guidance_weights(mb, z, q_pi, lambda);
    Eigen::MatrixXd eps = rng_eps_.normal_matrix(d, B);
    Eigen::VectorXd t(B);
    for (int i = 0; i < B; ++i) t[i] = rng_time_.next_double();
    FlowLossResult fl = weighted_fm_loss(flow_, mb.s, mb.a, g, eps, t);
    if (!std::isfinite(fl.loss)) {
      throw std::runtime_error("flow loss is non-finite");
    }
    adam_step(flow_.params, fl.grads, adam_flow_);
    if (cfg_.distill_target == DistillTarget::Polyak) {
      polyak_update(*flow_distill_target_, flow_.params, cfg_.tau);
    }
    rec.vabc_loss = fl.loss;
    rec.g_mean = g.mean();
    auto stats = guidance_stats(g, default_guidance_deltas());
    int k = 0;
    for (const auto& [delta, frac] : stats) {
      (void)delta;
      rec.g_above[size_t(k++)] = frac;
    }
    if (trace) {
      trace->guidance_weights = g;
      trace->phases.push_back("flow");
    }

    step_ = this_step;
    return rec;
  } catch (const std::exception& e) {
    throw std::runtime_error("train step " + std::to_string(this_step) + ": " + e.what());
  }
}

const OracleResult& Trainer::oracle() const {
  if (!oracle_) oracle_ = oracle_solve(env_, cfg_.gamma);
  return *oracle_;
}

RunResult Trainer::train_run(std::ostream* log) {
  std::filesystem::create_directories(cfg_.checkpoint_path);
  MetricsWriter writer(cfg_.metrics_path);
  save_checkpoint(std::filesystem::path(cfg_.checkpoint_path) / checkpoint_dirname(step_));

  RunResult result;
  bool evaluated = false;
  while (step_ < cfg_.total_steps) {
    MetricsRecord rec = train_step();
    if (step_ % cfg_.eval_every == 0) {
      const long long ordinal = step_ / cfg_.eval_every;
      EvalReport actor_rep = evaluate(PolicyKind::Actor, cfg_.eval_episodes, ordinal);
      EvalReport vabc_rep = evaluate(PolicyKind::Vabc, cfg_.eval_episodes, ordinal);
      rec.eval_score_actor = actor_rep.score;
      rec.eval_score_vabc = vabc_rep.score;
      result.actor_score = actor_rep.score;
      result.vabc_score = vabc_rep.score;
      result.actor_return = actor_rep.mean_return;
      result.vabc_return = vabc_rep.mean_return;
      evaluated = true;
      save_checkpoint(std::filesystem::path(cfg_.checkpoint_path) / checkpoint_dirname(step_));
      if (log) {
        *log << "step " << step_ << "  actor score " << actor_rep.score << "  vabc score "
             << vabc_rep.score << "\n";
      }
    }
    result.final_record = rec;
    writer.write(rec);
  }

  if (step_ % cfg_.eval_every != 0 || !evaluated) {
    const long long ordinal = step_ / cfg_.eval_every + 1;
    EvalReport actor_rep = evaluate(PolicyKind::Actor, cfg_.eval_episodes, ordinal);
    EvalReport vabc_rep = evaluate(PolicyKind::Vabc, cfg_.eval_episodes, ordinal);
    result.actor_score = actor_rep.score;
    result.vabc_score = vabc_rep.score;
    result.actor_return = actor_rep.mean_return;
    result.vabc_return = vabc_rep.mean_return;
    save_checkpoint(std::filesystem::path(cfg_.checkpoint_path) / checkpoint_dirname(step_));
    if (log) {
      *log << "final  actor score " << actor_rep.score << "  vabc score " << vabc_rep.score
           << "\n";
    }
  }
  return result;
}

}  // namespace gfp
