#include <fstream>

#include "gfp/net_io.hpp"
#include "gfp/trainer.hpp"

namespace gfp {
namespace {

using nlohmann::json;

json rng_state_json(const Rng& rng) {
  json arr = json::array();
  for (uint64_t w : rng.state()) arr.push_back(w);
  return arr;
}

std::array<uint64_t, 4> rng_state_from_json(const json& arr, const char* name) {
  if (!arr.is_array() || arr.size() != 4) {
    throw std::runtime_error(std::string("checkpoint rng state '") + name +
                             "' must be an array of 4 words");
  }
  std::array<uint64_t, 4> s{};
  for (int i = 0; i < 4; ++i) s[size_t(i)] = arr[size_t(i)].get<uint64_t>();
  return s;
}

// Depth-first comparison naming the first differing path.
void compare_config_json(const json& stored, const json& live, const std::string& path) {
  if (stored.is_object() && live.is_object()) {
    for (auto it = live.begin(); it != live.end(); ++it) {
      std::string sub = path.empty() ? it.key() : path + "." + it.key();
      if (!stored.contains(it.key())) {
        throw ConfigError("checkpoint config is missing field '" + sub + "'");
      }
      compare_config_json(stored[it.key()], it.value(), sub);
    }
    for (auto it = stored.begin(); it != stored.end(); ++it) {
      if (!live.contains(it.key())) {
        std::string sub = path.empty() ? it.key() : path + "." + it.key();
        throw ConfigError("checkpoint config has extra field '" + sub + "'");
      }
    }
    return;
  }
  if (stored != live) {
    throw ConfigError("checkpoint config mismatch at '" + path + "': checkpoint has " +
                      stored.dump() + ", run has " + live.dump());
  }
}

}  // namespace

void Trainer::save_checkpoint(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  save_network(dir, "actor", actor_.spec, actor_.params, step_);
  save_network(dir, "flow", flow_.spec, flow_.params, step_);
  save_network(dir, "critic_q1", critic_.spec, critic_.q1, step_);
  save_network(dir, "critic_q2", critic_.spec, critic_.q2, step_);
  save_network(dir, "critic_q1_target", critic_.spec, critic_.q1_target, step_);
  save_network(dir, "critic_q2_target", critic_.spec, critic_.q2_target, step_);
  if (flow_distill_target_) {
    save_network(dir, "flow_distill_target", flow_.spec, *flow_distill_target_, step_);
  }
  save_adam_blob(dir / "actor.adam.bin", adam_actor_);
  save_adam_blob(dir / "flow.adam.bin", adam_flow_);
  save_adam_blob(dir / "critic_q1.adam.bin", adam_q1_);
  save_adam_blob(dir / "critic_q2.adam.bin", adam_q2_);

  json state;
  state["format_version"] = 1;
  state["step"] = step_;
  json cfg_json = cfg_.to_json();
  state["config"] = cfg_json;
  state["config_hash"] = config_hash(cfg_json);
  json rng;
  rng["minibatch"] = rng_state_json(rng_minibatch_);
  rng["bootstrap"] = rng_state_json(rng_bootstrap_);
  rng["shared"] = rng_state_json(rng_shared_);
  rng["flow_eps"] = rng_state_json(rng_eps_);
  rng["flow_time"] = rng_state_json(rng_time_);
  state["rng"] = rng;
  json adam;
  adam["actor"] = adam_actor_.step;
  adam["flow"] = adam_flow_.step;
  adam["critic_q1"] = adam_q1_.step;
  adam["critic_q2"] = adam_q2_.step;
  state["adam_steps"] = adam;

  std::ofstream out(dir / "trainer_state.json", std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write checkpoint state: " + (dir / "trainer_state.json").string());
  }
  out << state.dump(2) << "\n";
}

void Trainer::load_checkpoint(const std::filesystem::path& dir) {
  const auto state_path = dir / "trainer_state.json";
  std::ifstream in(state_path, std::ios::binary);
  if (!in) throw ConfigError("checkpoint not found: " + state_path.string());
  json state;
  try {
    in >> state;
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint state file is not valid JSON: " + std::string(e.what()));
  }
  if (!state.contains("format_version") || state["format_version"].get<int>() != 1) {
    throw std::runtime_error("unsupported checkpoint format in " + state_path.string());
  }
  compare_config_json(state.at("config"), cfg_.to_json(), "");

  actor_.params = load_network(dir, "actor", actor_.spec).params;
  flow_.params = load_network(dir, "flow", flow_.spec).params;
  critic_.q1 = load_network(dir, "critic_q1", critic_.spec).params;
  critic_.q2 = load_network(dir, "critic_q2", critic_.spec).params;
  critic_.q1_target = load_network(dir, "critic_q1_target", critic_.spec).params;
  critic_.q2_target = load_network(dir, "critic_q2_target", critic_.spec).params;
  if (cfg_.distill_target == DistillTarget::Polyak) {
    flow_distill_target_ = load_network(dir, "flow_distill_target", flow_.spec).params;
  }

  load_adam_blob(dir / "actor.adam.bin", adam_actor_);
  load_adam_blob(dir / "flow.adam.bin", adam_flow_);
  load_adam_blob(dir / "critic_q1.adam.bin", adam_q1_);
  load_adam_blob(dir / "critic_q2.adam.bin", adam_q2_);
  const json& adam = state.at("adam_steps");
  adam_actor_.step = adam.at("actor").get<long long>();
  adam_flow_.step = adam.at("flow").get<long long>();
  adam_q1_.step = adam.at("critic_q1").get<long long>();
  adam_q2_.step = adam.at("critic_q2").get<long long>();

  const json& rng = state.at("rng");
  rng_minibatch_.set_state(rng_state_from_json(rng.at("minibatch"), "minibatch"));
  rng_bootstrap_.set_state(rng_state_from_json(rng.at("bootstrap"), "bootstrap"));
  rng_shared_.set_state(rng_state_from_json(rng.at("shared"), "shared"));
  rng_eps_.set_state(rng_state_from_json(rng.at("flow_eps"), "flow_eps"));
  rng_time_.set_state(rng_state_from_json(rng.at("flow_time"), "flow_time"));

  step_ = state.at("step").get<long long>();
}

Trainer Trainer::from_checkpoint(const std::filesystem::path& dir, OfflineDataset ds) {
  const auto state_path = dir / "trainer_state.json";
  std::ifstream in(state_path, std::ios::binary);
  if (!in) throw ConfigError("checkpoint not found: " + state_path.string());
  json state;
  try {
    in >> state;
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint state file is not valid JSON: " + std::string(e.what()));
  }
  TrainConfig cfg = TrainConfig::from_json(state.at("config"));
  Trainer t(std::move(cfg), std::move(ds));
  t.load_checkpoint(dir);
  return t;
}

Trainer Trainer::from_checkpoint(const std::filesystem::path& dir) {
  const auto state_path = dir / "trainer_state.json";
  std::ifstream in(state_path, std::ios::binary);
  if (!in) throw ConfigError("checkpoint not found: " + state_path.string());
  json state;
  try {
    in >> state;
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint state file is not valid JSON: " + std::string(e.what()));
  }
  TrainConfig cfg = TrainConfig::from_json(state.at("config"));
  OfflineDataset ds = load_dataset(cfg.dataset);
  Trainer t(std::move(cfg), std::move(ds));
  t.load_checkpoint(dir);
  return t;
}

}  // namespace gfp
