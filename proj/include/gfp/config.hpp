#pragma once
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfp/critic.hpp"
#include "gfp/guidance.hpp"

namespace gfp {

// Configuration and usage mistakes — mapped to exit code 2 by the CLI,
// distinct from check failures (exit 1).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class BellmanTargetKind { Standard, Vabc };
enum class DistillTarget { Current, Polyak };

BellmanTargetKind bellman_target_from_string(const std::string& s);
std::string to_string(BellmanTargetKind k);
Aggregation aggregation_from_string(const std::string& s);
std::string to_string(Aggregation a);
DistillTarget distill_target_from_string(const std::string& s);
std::string to_string(DistillTarget d);

struct TrainConfig {
  std::string env_id;   // required
  std::string dataset;  // required: dataset directory
  uint64_t seed = 0;
  long long total_steps = 50000;
  int batch_size = 256;
  double gamma = 0.99;
  double alpha = 1.0;
  GuidanceConfig guidance;
  BellmanTargetKind bellman_target = BellmanTargetKind::Standard;
  Aggregation aggregation = Aggregation::Mean;
  double tau = 0.005;
  double learning_rate = 3e-4;
  int euler_steps = 10;
  std::vector<int> hidden_dims{256, 256};
  long long eval_every = 5000;
  int eval_episodes = 100;
  std::string metrics_path = "metrics.csv";
  std::string checkpoint_path = "checkpoints";
  DistillTarget distill_target = DistillTarget::Current;

  void validate() const;  // throws ConfigError naming the field
  nlohmann::json to_json() const;
  // Strict parse: unknown fields (top level or inside guidance) rejected.
  static TrainConfig from_json(const nlohmann::json& j);
  static TrainConfig load(const std::filesystem::path& file);
};

// Applies one `--set key=value` override onto a raw config JSON document.
// Dotted keys (guidance.mode) navigate nested objects; values parse as JSON
// scalars/arrays with a plain-string fallback.
void apply_override(nlohmann::json& doc, const std::string& key, const std::string& value);

// FNV-1a over the canonical dump — the checkpoint's config fingerprint.
std::string config_hash(const nlohmann::json& canonical);

}  // namespace gfp
