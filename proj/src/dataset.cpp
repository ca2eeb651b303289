#include "gfp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace gfp {

namespace {
using nlohmann::json;
constexpr double kStdFloor = 1e-8;

enum class Behavior { Expert, NoisyExpert, Random, LowMode };
}  // namespace

void BehaviorMix::validate(const EnvSpec& spec) const {
  for (double w : {expert, noisy_expert, random, low_mode})
    if (!(w >= 0.0) || !(w <= 1.0))
      throw std::invalid_argument("mix weights must lie in [0,1]");
  const double total = expert + noisy_expert + random + low_mode;
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("mix weights must sum to 1 (got " + std::to_string(total) + ")");
  if (low_mode > 0.0 && !has_low_mode(spec))
    throw std::invalid_argument("mix assigns low-mode weight but " + spec.name +
                                " has no low-reward mode");
}

std::map<std::string, double> BehaviorMix::as_map() const {
  return {{"expert", expert},
          {"noisy-expert", noisy_expert},
          {"random", random},
          {"low-mode", low_mode}};
}

BehaviorMix BehaviorMix::from_map(const std::map<std::string, double>& m) {
  BehaviorMix mix;
  for (const auto& [k, v] : m) {
    if (k == "expert")
      mix.expert = v;
    else if (k == "noisy-expert")
      mix.noisy_expert = v;
    else if (k == "random")
      mix.random = v;
    else if (k == "low-mode")
      mix.low_mode = v;
    else
      throw std::invalid_argument("mix has unknown behavior '" + k +
                                  "' (expected expert|noisy-expert|random|low-mode)");
  }
  return mix;
}

namespace {
Behavior draw_behavior(const BehaviorMix& mix, Rng& rng) {
  const double u = rng.next_double();
  double acc = mix.expert;
  if (u < acc) return Behavior::Expert;
  acc += mix.noisy_expert;
  if (u < acc) return Behavior::NoisyExpert;
  acc += mix.random;
  if (u < acc) return Behavior::Random;
  return Behavior::LowMode;
}

Eigen::VectorXd behavior_action(Behavior b, const EnvSpec& spec, const Eigen::VectorXd& s,
                                Rng& rng) {
  Eigen::VectorXd a(spec.action_dim);
  switch (b) {
    case Behavior::Expert:
      a = greedy_action(spec, s);
      for (int i = 0; i < spec.action_dim; ++i) a[i] += 0.05 * rng.next_normal();
      break;
    case Behavior::NoisyExpert:
      a = greedy_action(spec, s);
      for (int i = 0; i < spec.action_dim; ++i) a[i] += 0.3 * rng.next_normal();
      break;
    case Behavior::Random:
      for (int i = 0; i < spec.action_dim; ++i) a[i] = rng.uniform(-1.0, 1.0);
      break;
    case Behavior::LowMode:
      a = low_mode_action(spec, s);
      for (int i = 0; i < spec.action_dim; ++i) a[i] += 0.05 * rng.next_normal();
      break;
  }
  for (int i = 0; i < spec.action_dim; ++i) a[i] = std::clamp(a[i], -1.0, 1.0);
  return a;
}
}  // namespace

OfflineDataset generate_dataset(const EnvSpec& spec, int64_t n_transitions,
                                const BehaviorMix& mix, uint64_t seed) {
  if (n_transitions < 1) throw std::invalid_argument("generate_dataset: need n >= 1");
  mix.validate(spec);

  OfflineDataset ds;
  ds.env_id = spec.name;
  ds.state_dim = spec.state_dim;
  ds.action_dim = spec.action_dim;
  ds.n = n_transitions;
  ds.seed = seed;
  ds.mix = mix;
  ds.s.reserve(static_cast<size_t>(n_transitions) * spec.state_dim);
  ds.a.reserve(static_cast<size_t>(n_transitions) * spec.action_dim);
  ds.r.reserve(static_cast<size_t>(n_transitions));
  ds.s_next.reserve(static_cast<size_t>(n_transitions) * spec.state_dim);
  ds.terminal.reserve(static_cast<size_t>(n_transitions));

  Rng rng(seed, 0);
  int64_t written = 0;
  while (written < n_transitions) {
    const Behavior behavior = draw_behavior(mix, rng);
    Eigen::VectorXd s = env_reset(spec, rng);
    for (int step = 0; step < spec.horizon && written < n_transitions; ++step) {
      const Eigen::VectorXd a = behavior_action(behavior, spec, s, rng);
      const StepResult res = env_step(spec, s, a);
      for (int i = 0; i < spec.state_dim; ++i) ds.s.push_back(static_cast<float>(s[i]));
      for (int i = 0; i < spec.action_dim; ++i) ds.a.push_back(static_cast<float>(a[i]));
      ds.r.push_back(static_cast<float>(res.reward));
      for (int i = 0; i < spec.state_dim; ++i)
        ds.s_next.push_back(static_cast<float>(res.s_next[i]));
      ds.terminal.push_back(res.terminal ? 1 : 0);
      ++written;
      if (res.terminal) break;
      s = res.s_next;
    }
  }

  // Population stats over the s column (float64 accumulation).
  ds.state_mean.assign(spec.state_dim, 0.0);
  ds.state_std.assign(spec.state_dim, 0.0);
  for (int64_t row = 0; row < ds.n; ++row)
    for (int i = 0; i < spec.state_dim; ++i)
      ds.state_mean[static_cast<size_t>(i)] += ds.s[static_cast<size_t>(row * spec.state_dim + i)];
  for (auto& m : ds.state_mean) m /= static_cast<double>(ds.n);
  for (int64_t row = 0; row < ds.n; ++row)
    for (int i = 0; i < spec.state_dim; ++i) {
      const double d =
          ds.s[static_cast<size_t>(row * spec.state_dim + i)] - ds.state_mean[static_cast<size_t>(i)];
      ds.state_std[static_cast<size_t>(i)] += d * d;
    }
  for (auto& v : ds.state_std) v = std::max(std::sqrt(v / static_cast<double>(ds.n)), kStdFloor);
  return ds;
}

namespace {
template <typename T>
void write_column(const std::filesystem::path& file, const std::vector<T>& col) {
  std::ofstream f(file, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + file.string());
  f.write(reinterpret_cast<const char*>(col.data()),
          static_cast<std::streamsize>(col.size() * sizeof(T)));
  if (!f) throw std::runtime_error("write failed: " + file.string());
}

template <typename T>
void read_column(const std::filesystem::path& file, std::vector<T>& col, size_t count,
                 const std::string& name) {
  col.resize(count);
  std::ifstream f(file, std::ios::binary);
  if (!f) throw std::runtime_error("missing dataset column file: " + file.string());
  f.seekg(0, std::ios::end);
  const auto actual = static_cast<size_t>(f.tellg());
  const size_t expected = count * sizeof(T);
  if (actual != expected)
    throw std::runtime_error("column '" + name + "' has " + std::to_string(actual) +
                             " bytes, expected " + std::to_string(expected));
  f.seekg(0);
  f.read(reinterpret_cast<char*>(col.data()), static_cast<std::streamsize>(expected));
  if (!f) throw std::runtime_error("read failed: " + file.string());
}
}  // namespace

void save_dataset(const OfflineDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["format_version"] = 1;
  manifest["env_id"] = ds.env_id;
  manifest["n"] = ds.n;
  manifest["state_dim"] = ds.state_dim;
  manifest["action_dim"] = ds.action_dim;
  manifest["seed"] = ds.seed;
  manifest["mix"] = ds.mix.as_map();
  manifest["state_mean"] = ds.state_mean;
  manifest["state_std"] = ds.state_std;
  manifest["files"] = json{{"s", "s.f32"},
                           {"a", "a.f32"},
                           {"r", "r.f32"},
                           {"s_next", "s_next.f32"},
                           {"terminal", "terminal.u8"}};
  std::ofstream mf(dir / "manifest.json", std::ios::trunc);
  if (!mf) throw std::runtime_error("cannot open for writing: " + (dir / "manifest.json").string());
  mf << manifest.dump(2) << "\n";

  write_column(dir / "s.f32", ds.s);
  write_column(dir / "a.f32", ds.a);
  write_column(dir / "r.f32", ds.r);
  write_column(dir / "s_next.f32", ds.s_next);
  write_column(dir / "terminal.u8", ds.terminal);
}

OfflineDataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw std::runtime_error("missing dataset manifest: " + (dir / "manifest.json").string());
  json manifest = json::parse(mf);
  if (manifest.at("format_version").get<int>() != 1)
    throw std::runtime_error("dataset format_version is not 1");

  OfflineDataset ds;
  ds.env_id = manifest.at("env_id").get<std::string>();
  ds.n = manifest.at("n").get<int64_t>();
  if (ds.n < 1) throw std::runtime_error("dataset manifest field n must be >= 1");
  ds.state_dim = manifest.at("state_dim").get<int>();
  ds.action_dim = manifest.at("action_dim").get<int>();
  if (ds.state_dim < 1 || ds.action_dim < 1)
    throw std::runtime_error("dataset manifest dims must be >= 1");
  ds.seed = manifest.at("seed").get<uint64_t>();
  ds.mix = BehaviorMix::from_map(manifest.at("mix").get<std::map<std::string, double>>());
  ds.state_mean = manifest.at("state_mean").get<std::vector<double>>();
  ds.state_std = manifest.at("state_std").get<std::vector<double>>();
  if (ds.state_mean.size() != static_cast<size_t>(ds.state_dim) ||
      ds.state_std.size() != static_cast<size_t>(ds.state_dim))
    throw std::runtime_error("dataset manifest stats length does not match state_dim");
  for (double v : ds.state_std)
    if (!(v >= kStdFloor)) throw std::runtime_error("dataset manifest state_std below floor");

  const auto& files = manifest.at("files");
  const auto n = static_cast<size_t>(ds.n);
  read_column(dir / files.at("s").get<std::string>(), ds.s, n * ds.state_dim, "s");
  read_column(dir / files.at("a").get<std::string>(), ds.a, n * ds.action_dim, "a");
  read_column(dir / files.at("r").get<std::string>(), ds.r, n, "r");
  read_column(dir / files.at("s_next").get<std::string>(), ds.s_next, n * ds.state_dim, "s_next");
  read_column(dir / files.at("terminal").get<std::string>(), ds.terminal, n, "terminal");
  return ds;
}

Minibatch sample_minibatch(const OfflineDataset& ds, int batch_size, Rng& rng) {
  if (batch_size < 1) throw std::invalid_argument("sample_minibatch: batch_size must be >= 1");
  if (ds.n < 1) throw std::invalid_argument("sample_minibatch: empty dataset");
  Minibatch mb;
  mb.s.resize(ds.state_dim, batch_size);
  mb.a.resize(ds.action_dim, batch_size);
  mb.r.resize(batch_size);
  mb.s_next.resize(ds.state_dim, batch_size);
  mb.terminal.resize(batch_size);
  mb.idx.resize(static_cast<size_t>(batch_size));
  for (int c = 0; c < batch_size; ++c) {
    const auto i = static_cast<int64_t>(rng.next_double() * static_cast<double>(ds.n));
    const int64_t row = std::min<int64_t>(i, ds.n - 1);
    mb.idx[static_cast<size_t>(c)] = row;
    for (int d = 0; d < ds.state_dim; ++d) {
      const auto k = static_cast<size_t>(row * ds.state_dim + d);
      const auto sd = static_cast<size_t>(d);
      mb.s(d, c) = (static_cast<double>(ds.s[k]) - ds.state_mean[sd]) / ds.state_std[sd];
      mb.s_next(d, c) =
          (static_cast<double>(ds.s_next[k]) - ds.state_mean[sd]) / ds.state_std[sd];
    }
    for (int d = 0; d < ds.action_dim; ++d)
      mb.a(d, c) = static_cast<double>(ds.a[static_cast<size_t>(row * ds.action_dim + d)]);
    mb.r[c] = static_cast<double>(ds.r[static_cast<size_t>(row)]);
    mb.terminal[c] = static_cast<double>(ds.terminal[static_cast<size_t>(row)]);
  }
  return mb;
}

Eigen::VectorXd normalize_state(const OfflineDataset& ds, const Eigen::VectorXd& s_raw) {
  if (s_raw.size() != ds.state_dim)
    throw std::invalid_argument("normalize_state: dim mismatch");
  Eigen::VectorXd out(ds.state_dim);
  for (int d = 0; d < ds.state_dim; ++d)
    out[d] = (s_raw[d] - ds.state_mean[static_cast<size_t>(d)]) / ds.state_std[static_cast<size_t>(d)];
  return out;
}

}  // namespace gfp
