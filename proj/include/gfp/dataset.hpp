#pragma once
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gfp/env.hpp"
#include "gfp/rng.hpp"

namespace gfp {

// Per-episode behavior mixture. Weights must be >= 0 and sum to 1; low-mode
// is only meaningful on environments that have one.
struct BehaviorMix {
  double expert = 0.0;
  double noisy_expert = 0.0;
  double random = 0.0;
  double low_mode = 0.0;

  void validate(const EnvSpec& spec) const;
  std::map<std::string, double> as_map() const;
  static BehaviorMix from_map(const std::map<std::string, double>& m);  // throws on unknown key
};

// Columns are stored exactly as the file format keeps them (f32 / u8), so a
// round trip is byte identity by construction. State normalization stats are
// float64 over the s column, std floored at 1e-8.
struct OfflineDataset {
  std::string env_id;
  int state_dim = 0;
  int action_dim = 0;
  int64_t n = 0;
  uint64_t seed = 0;
  BehaviorMix mix;
  std::vector<float> s, a, r, s_next;
  std::vector<uint8_t> terminal;
  std::vector<double> state_mean, state_std;
};

OfflineDataset generate_dataset(const EnvSpec& spec, int64_t n_transitions,
                                const BehaviorMix& mix, uint64_t seed);

void save_dataset(const OfflineDataset& ds, const std::filesystem::path& dir);
OfflineDataset load_dataset(const std::filesystem::path& dir);

struct Minibatch {
  Eigen::MatrixXd s;       // normalized, state_dim x B
  Eigen::MatrixXd a;       // raw actions, action_dim x B
  Eigen::VectorXd r;
  Eigen::MatrixXd s_next;  // normalized
  Eigen::VectorXd terminal;
  std::vector<int64_t> idx;
};
// B indices i.i.d. uniform with replacement.
Minibatch sample_minibatch(const OfflineDataset& ds, int batch_size, Rng& rng);

// (x - mean) / std with the dataset's stats, for evaluation-time states.
Eigen::VectorXd normalize_state(const OfflineDataset& ds, const Eigen::VectorXd& s_raw);

}  // namespace gfp
