#pragma once
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gfp/actor.hpp"
#include "gfp/adam.hpp"
#include "gfp/config.hpp"
#include "gfp/critic.hpp"
#include "gfp/dataset.hpp"
#include "gfp/env.hpp"
#include "gfp/flow_policy.hpp"
#include "gfp/metrics.hpp"
#include "gfp/oracle.hpp"
#include "gfp/rng.hpp"

namespace gfp {

// RNG stream layout. Stream 0 is consumed once at construction to initialize
// network parameters, in this exact order: critic (q1 then q2), actor, flow.
// Streams 1-5 advance once per training step each; their word states are part
// of every checkpoint. Evaluation never touches them: episode e of the k-th
// evaluation uses its own stream kEvalStreamBase + k*kEvalStreamStride + e.
inline constexpr uint64_t kStreamInit = 0;
inline constexpr uint64_t kStreamMinibatch = 1;
inline constexpr uint64_t kStreamBootstrapNoise = 2;
inline constexpr uint64_t kStreamSharedNoise = 3;
inline constexpr uint64_t kStreamFlowEps = 4;
inline constexpr uint64_t kStreamFlowTime = 5;
inline constexpr uint64_t kEvalStreamBase = 1000000000;
inline constexpr uint64_t kEvalStreamStride = 1000000;

enum class PolicyKind { Actor, Vabc };

struct EvalReport {
  double mean_return = 0.0;  // undiscounted episodic return, averaged
  double score = 0.0;        // normalized against the environment oracle
};

// Optional per-step observer for tests: filled only when requested.
struct StepTrace {
  Eigen::VectorXd bellman_targets;
  Eigen::VectorXd guidance_weights;
  std::vector<std::string> phases;  // always {"critic", "actor", "flow"}
};

struct RunResult {
  MetricsRecord final_record;
  double actor_score = 0.0;
  double vabc_score = 0.0;
  double actor_return = 0.0;
  double vabc_return = 0.0;
};

class Trainer {
 public:
  Trainer(TrainConfig cfg, OfflineDataset ds);
  static Trainer from_checkpoint(const std::filesystem::path& dir, OfflineDataset ds);
  // Convenience: reads the config embedded in the checkpoint, loads its
  // dataset from disk, then resumes.
  static Trainer from_checkpoint(const std::filesystem::path& dir);

  MetricsRecord train_step(StepTrace* trace = nullptr);
  // Full loop: metrics rows for every step, evaluation + checkpoint at step 0,
  // every eval_every steps, and at the final step.
  RunResult train_run(std::ostream* log = nullptr);

  EvalReport evaluate(PolicyKind kind, int episodes, long long eval_ordinal) const;
  // Same rollout machinery under a caller-chosen seed (the eval command).
  EvalReport evaluate_seeded(PolicyKind kind, int episodes, uint64_t seed,
                             long long eval_ordinal) const;

  void save_checkpoint(const std::filesystem::path& dir) const;
  // Restores a saved state into this trainer. The stored config must agree
  // with the live one field for field; the first differing field is named.
  void load_checkpoint(const std::filesystem::path& dir);

  const TrainConfig& config() const { return cfg_; }
  long long step() const { return step_; }
  const Actor& actor() const { return actor_; }
  const FlowPolicy& flow() const { return flow_; }
  const CriticEnsemble& critic() const { return critic_; }
  const OfflineDataset& dataset() const { return ds_; }
  const OracleResult& oracle() const;

  // Surgical access for diagnostics and tests (freezing a head, substituting
  // a reference policy). Training code never needs these.
  Actor& actor_mut() { return actor_; }
  FlowPolicy& flow_mut() { return flow_; }
  CriticEnsemble& critic_mut() { return critic_; }

 private:
  Eigen::VectorXd guidance_weights(const Minibatch& mb, const Eigen::MatrixXd& z,
                                   const Eigen::VectorXd& q_actor, double lambda) const;

  TrainConfig cfg_;
  EnvSpec env_;
  OfflineDataset ds_;
  CriticEnsemble critic_;
  Actor actor_;
  FlowPolicy flow_;
  std::optional<ParamSet> flow_distill_target_;  // present iff distill_target == polyak
  AdamState adam_q1_, adam_q2_, adam_actor_, adam_flow_;
  Rng rng_minibatch_, rng_bootstrap_, rng_shared_, rng_eps_, rng_time_;
  long long step_ = 0;
  mutable std::optional<OracleResult> oracle_;
};

// Rolls an arbitrary policy with the same per-episode stream convention the
// trainer's evaluation uses and scores it against the oracle. The policy sees
// the raw (unnormalized) state and owns all noise it draws from rng.
EvalReport evaluate_custom_policy(
    const EnvSpec& env, const OracleResult& oracle,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, Rng&)>& policy, int episodes,
    uint64_t seed, long long eval_ordinal);

}  // namespace gfp
