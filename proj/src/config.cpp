#include "gfp/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "gfp/env.hpp"

namespace gfp {
namespace {

using nlohmann::json;

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw ConfigError("config field '" + field + "': " + why);
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& scope) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key())) {
      throw ConfigError("unknown config field '" + (scope.empty() ? it.key() : scope + "." + it.key()) + "'");
    }
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    bad_field(key, std::string("wrong type (") + e.what() + ")");
  }
}

void read_string_enum(const json& obj, const char* key, std::string& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_string()) bad_field(key, "expected a string");
  out = it->get<std::string>();
}

}  // namespace

BellmanTargetKind bellman_target_from_string(const std::string& s) {
  if (s == "standard") return BellmanTargetKind::Standard;
  if (s == "vabc") return BellmanTargetKind::Vabc;
  throw ConfigError("unknown bellman_target '" + s + "' (expected standard|vabc)");
}

std::string to_string(BellmanTargetKind k) {
  return k == BellmanTargetKind::Standard ? "standard" : "vabc";
}

Aggregation aggregation_from_string(const std::string& s) {
  if (s == "mean") return Aggregation::Mean;
  if (s == "min") return Aggregation::Min;
  throw ConfigError("unknown aggregation '" + s + "' (expected mean|min)");
}

std::string to_string(Aggregation a) { return a == Aggregation::Mean ? "mean" : "min"; }

DistillTarget distill_target_from_string(const std::string& s) {
  if (s == "current") return DistillTarget::Current;
  if (s == "polyak") return DistillTarget::Polyak;
  throw ConfigError("unknown distill_target '" + s + "' (expected current|polyak)");
}

std::string to_string(DistillTarget d) { return d == DistillTarget::Current ? "current" : "polyak"; }

void TrainConfig::validate() const {
  if (env_id.empty()) bad_field("env_id", "required");
  try {
    env_spec(env_id);
  } catch (const std::exception&) {
    bad_field("env_id", "unknown environment '" + env_id + "'");
  }
  if (dataset.empty()) bad_field("dataset", "required");
  if (total_steps < 0) bad_field("total_steps", "must be >= 0");
  if (batch_size < 1) bad_field("batch_size", "must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) bad_field("gamma", "must lie in (0, 1)");
  if (alpha < 0.0) bad_field("alpha", "must be >= 0");
  try {
    guidance.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config field 'guidance': ") + e.what());
  }
  if (!(tau > 0.0 && tau <= 1.0)) bad_field("tau", "must lie in (0, 1]");
  if (!(learning_rate > 0.0)) bad_field("learning_rate", "must be > 0");
  if (euler_steps < 1) bad_field("euler_steps", "must be >= 1");
  if (hidden_dims.empty()) bad_field("hidden_dims", "must be non-empty");
  for (int h : hidden_dims) {
    if (h < 1) bad_field("hidden_dims", "entries must be >= 1");
  }
  if (eval_every < 1) bad_field("eval_every", "must be >= 1");
  if (eval_episodes < 1 || eval_episodes > 100000) bad_field("eval_episodes", "must lie in [1, 100000]");
  if (metrics_path.empty()) bad_field("metrics_path", "required");
  if (checkpoint_path.empty()) bad_field("checkpoint_path", "required");
}

nlohmann::json TrainConfig::to_json() const {
  json g;
  g["mode"] = to_string(guidance.mode);
  g["eta"] = guidance.eta;
  g["awr_clip"] = guidance.awr_clip;
  g["lambda_floor"] = guidance.lambda_floor;
  json j;
  j["env_id"] = env_id;
  j["dataset"] = dataset;
  j["seed"] = seed;
  j["total_steps"] = total_steps;
  j["batch_size"] = batch_size;
  j["gamma"] = gamma;
  j["alpha"] = alpha;
  j["guidance"] = g;
  j["bellman_target"] = to_string(bellman_target);
  j["aggregation"] = to_string(aggregation);
  j["tau"] = tau;
  j["learning_rate"] = learning_rate;
  j["euler_steps"] = euler_steps;
  j["hidden_dims"] = hidden_dims;
  j["eval_every"] = eval_every;
  j["eval_episodes"] = eval_episodes;
  j["metrics_path"] = metrics_path;
  j["checkpoint_path"] = checkpoint_path;
  j["distill_target"] = to_string(distill_target);
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  static const std::set<std::string> kKnown = {
      "env_id",      "dataset",       "seed",          "total_steps",   "batch_size",
      "gamma",       "alpha",         "guidance",      "bellman_target", "aggregation",
      "tau",         "learning_rate", "euler_steps",   "hidden_dims",   "eval_every",
      "eval_episodes", "metrics_path", "checkpoint_path", "distill_target"};
  reject_unknown(j, kKnown, "");

  TrainConfig c;
  read_string_enum(j, "env_id", c.env_id);
  read_string_enum(j, "dataset", c.dataset);
  read_field(j, "seed", c.seed);
  read_field(j, "total_steps", c.total_steps);
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "gamma", c.gamma);
  read_field(j, "alpha", c.alpha);

  if (auto it = j.find("guidance"); it != j.end()) {
    if (!it->is_object()) bad_field("guidance", "expected an object");
    static const std::set<std::string> kGuidanceKnown = {"mode", "eta", "awr_clip", "lambda_floor"};
    reject_unknown(*it, kGuidanceKnown, "guidance");
    std::string mode = to_string(c.guidance.mode);
    read_string_enum(*it, "mode", mode);
    c.guidance.mode = guidance_mode_from_string(mode);
    read_field(*it, "eta", c.guidance.eta);
    read_field(*it, "awr_clip", c.guidance.awr_clip);
    read_field(*it, "lambda_floor", c.guidance.lambda_floor);
  }

  std::string bellman = to_string(c.bellman_target);
  read_string_enum(j, "bellman_target", bellman);
  c.bellman_target = bellman_target_from_string(bellman);
  std::string agg = to_string(c.aggregation);
  read_string_enum(j, "aggregation", agg);
  c.aggregation = aggregation_from_string(agg);

  read_field(j, "tau", c.tau);
  read_field(j, "learning_rate", c.learning_rate);
  read_field(j, "euler_steps", c.euler_steps);
  read_field(j, "hidden_dims", c.hidden_dims);
  read_field(j, "eval_every", c.eval_every);
  read_field(j, "eval_episodes", c.eval_episodes);
  read_string_enum(j, "metrics_path", c.metrics_path);
  read_string_enum(j, "checkpoint_path", c.checkpoint_path);
  std::string distill = to_string(c.distill_target);
  read_string_enum(j, "distill_target", distill);
  c.distill_target = distill_target_from_string(distill);

  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file: " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + file.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void apply_override(nlohmann::json& doc, const std::string& key, const std::string& value) {
  if (key.empty()) throw ConfigError("--set key must be non-empty");
  json* node = &doc;
  size_t pos = 0;
  while (true) {
    size_t dot = key.find('.', pos);
    std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty()) throw ConfigError("--set key '" + key + "' has an empty path segment");
    if (dot == std::string::npos) {
      json parsed;
      try {
        parsed = json::parse(value);
      } catch (const json::exception&) {
        parsed = value;  // bare words (e.g. env ids, modes) are strings
      }
      if (parsed.is_object()) throw ConfigError("--set value for '" + key + "' must be a scalar or array");
      (*node)[part] = parsed;
      return;
    }
    if (!node->contains(part)) (*node)[part] = json::object();
    node = &(*node)[part];
    if (!node->is_object()) throw ConfigError("--set key '" + key + "' descends into a non-object");
    pos = dot + 1;
  }
}

std::string config_hash(const nlohmann::json& canonical) {
  const std::string s = canonical.dump(2);
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << "fnv1a:" << std::hex << h;
  return out.str();
}

}  // namespace gfp
