#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "gfp/dataset.hpp"
#include "gfp/env.hpp"
#include "gfp/rng.hpp"

using namespace gfp;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  fs::path p = fs::temp_directory_path() / (std::string("gfp_ds_") + tag);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("behavior mix validation") {
  EnvSpec lr = env_spec("line-reach");
  EnvSpec bb = env_spec("bandit-bimodal");

  BehaviorMix ok;
  ok.expert = 0.5;
  ok.random = 0.5;
  CHECK_NOTHROW(ok.validate(lr));

  BehaviorMix bad_sum;
  bad_sum.expert = 0.5;
  CHECK_THROWS_AS(bad_sum.validate(lr), std::invalid_argument);

  BehaviorMix negative;
  negative.expert = 1.2;
  negative.random = -0.2;
  CHECK_THROWS_AS(negative.validate(lr), std::invalid_argument);

  BehaviorMix low;
  low.low_mode = 1.0;
  CHECK_NOTHROW(low.validate(bb));
  CHECK_THROWS_AS(low.validate(lr), std::invalid_argument);

  CHECK_THROWS_AS(BehaviorMix::from_map({{"exprt", 1.0}}), std::invalid_argument);
  BehaviorMix round = BehaviorMix::from_map(ok.as_map());
  CHECK(round.expert == 0.5);
  CHECK(round.random == 0.5);
}

TEST_CASE("generation is deterministic per seed and fills exactly n rows") {
  EnvSpec bb = env_spec("bandit-bimodal");
  BehaviorMix mix;
  mix.low_mode = 0.5;
  mix.expert = 0.5;
  OfflineDataset d1 = generate_dataset(bb, 500, mix, 9);
  OfflineDataset d2 = generate_dataset(bb, 500, mix, 9);
  OfflineDataset d3 = generate_dataset(bb, 500, mix, 10);

  CHECK(d1.n == 500);
  CHECK(d1.s.size() == 500);
  CHECK(d1.a.size() == 500);
  CHECK(d1.r.size() == 500);
  CHECK(d1.s_next.size() == 500);
  CHECK(d1.terminal.size() == 500);
  CHECK(d1.s == d2.s);
  CHECK(d1.a == d2.a);
  CHECK(d1.r == d2.r);
  CHECK(d1.a != d3.a);
  CHECK(d1.env_id == "bandit-bimodal");
  CHECK(d1.seed == 9);
}

TEST_CASE("bandit low/expert mix yields two action modes with balanced mass") {
  EnvSpec bb = env_spec("bandit-bimodal");
  BehaviorMix mix;
  mix.low_mode = 0.5;
  mix.expert = 0.5;
  OfflineDataset ds = generate_dataset(bb, 10000, mix, 1);
  int near_high = 0, near_low = 0;
  for (float a : ds.a) {
    if (std::abs(a - 0.7) < 0.15) ++near_high;
    if (std::abs(a + 0.5) < 0.15) ++near_low;
  }
  CHECK(near_high > 4000);
  CHECK(near_high < 6000);
  CHECK(near_low > 4000);
  CHECK(near_low < 6000);
  // Bandit transitions are all single-step.
  for (uint8_t t : ds.terminal) CHECK(t == 1);
}

TEST_CASE("transitions replay through the env dynamics") {
  EnvSpec lr = env_spec("line-reach");
  BehaviorMix mix;
  mix.expert = 0.4;
  mix.noisy_expert = 0.4;
  mix.random = 0.2;
  OfflineDataset ds = generate_dataset(lr, 2000, mix, 3);
  for (int64_t i = 0; i < ds.n; ++i) {
    Eigen::VectorXd s = Eigen::VectorXd::Constant(1, static_cast<double>(ds.s[i]));
    Eigen::VectorXd a = Eigen::VectorXd::Constant(1, static_cast<double>(ds.a[i]));
    StepResult want = env_step(lr, s, a);
    // The rollout ran in double precision and the store quantizes to f32, so
    // replaying from the quantized (s, a) can drift by a few float ulps.
    CHECK(std::abs(static_cast<float>(want.s_next[0]) - ds.s_next[i]) <= 5e-7f);
    CHECK(std::abs(static_cast<float>(want.reward) - ds.r[i]) <= 5e-7f);
    CHECK((want.terminal ? 1 : 0) == ds.terminal[i]);
  }
  // Behavior actions live in the clipped range.
  for (float a : ds.a) CHECK(std::abs(a) <= 1.0f);
}

TEST_CASE("normalization stats summarize the stored states") {
  EnvSpec tg = env_spec("two-goal");
  BehaviorMix mix;
  mix.expert = 0.5;
  mix.random = 0.5;
  OfflineDataset ds = generate_dataset(tg, 3000, mix, 5);
  REQUIRE(ds.state_mean.size() == 2);
  REQUIRE(ds.state_std.size() == 2);
  for (int d = 0; d < 2; ++d) {
    double sum = 0.0;
    for (int64_t i = 0; i < ds.n; ++i) sum += ds.s[static_cast<size_t>(i * 2 + d)];
    CHECK(ds.state_mean[d] == doctest::Approx(sum / static_cast<double>(ds.n)).epsilon(1e-9));
    CHECK(ds.state_std[d] >= 1e-8);
  }
  Eigen::VectorXd raw(2);
  raw << 0.3, -0.2;
  Eigen::VectorXd z = normalize_state(ds, raw);
  CHECK(z[0] == doctest::Approx((0.3 - ds.state_mean[0]) / ds.state_std[0]).epsilon(1e-12));
  CHECK(z[1] == doctest::Approx((-0.2 - ds.state_mean[1]) / ds.state_std[1]).epsilon(1e-12));
}

TEST_CASE("save/load round trip is exact") {
  EnvSpec bb = env_spec("bandit-bimodal");
  BehaviorMix mix;
  mix.low_mode = 0.3;
  mix.expert = 0.7;
  OfflineDataset ds = generate_dataset(bb, 256, mix, 21);
  fs::path dir = temp_dir("roundtrip");
  save_dataset(ds, dir);
  OfflineDataset back = load_dataset(dir);
  CHECK(back.env_id == ds.env_id);
  CHECK(back.n == ds.n);
  CHECK(back.seed == ds.seed);
  CHECK(back.mix.low_mode == ds.mix.low_mode);
  CHECK(back.s == ds.s);
  CHECK(back.a == ds.a);
  CHECK(back.r == ds.r);
  CHECK(back.s_next == ds.s_next);
  CHECK(back.terminal == ds.terminal);
  CHECK(back.state_mean == ds.state_mean);
  CHECK(back.state_std == ds.state_std);
  fs::remove_all(dir);
}

TEST_CASE("loading rejects a manifest whose sizes disagree with the blob") {
  EnvSpec bb = env_spec("bandit-bimodal");
  BehaviorMix mix;
  mix.low_mode = 0.5;
  mix.expert = 0.5;
  OfflineDataset ds = generate_dataset(bb, 64, mix, 2);
  fs::path dir = temp_dir("truncated");
  save_dataset(ds, dir);
  fs::path blob = dir / "s.f32";
  fs::resize_file(blob, fs::file_size(blob) - 4);
  CHECK_THROWS_AS(load_dataset(dir), std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("minibatch sampling is deterministic and shaped") {
  EnvSpec bb = env_spec("bandit-bimodal");
  BehaviorMix mix;
  mix.low_mode = 0.5;
  mix.expert = 0.5;
  OfflineDataset ds = generate_dataset(bb, 1000, mix, 4);

  Rng r1(8, 1), r2(8, 1);
  Minibatch m1 = sample_minibatch(ds, 32, r1);
  Minibatch m2 = sample_minibatch(ds, 32, r2);
  CHECK(m1.idx == m2.idx);
  CHECK(m1.s.rows() == 1);
  CHECK(m1.s.cols() == 32);
  CHECK(m1.a.cols() == 32);
  CHECK(m1.r.size() == 32);
  CHECK(m1.terminal.size() == 32);

  for (int j = 0; j < 32; ++j) {
    int64_t i = m1.idx[static_cast<size_t>(j)];
    REQUIRE(i >= 0);
    REQUIRE(i < ds.n);
    // States are normalized in the batch; actions stay raw.
    double want_s = (static_cast<double>(ds.s[static_cast<size_t>(i)]) - ds.state_mean[0]) /
                    ds.state_std[0];
    CHECK(m1.s(0, j) == doctest::Approx(want_s).epsilon(1e-12));
    CHECK(m1.a(0, j) == static_cast<double>(ds.a[static_cast<size_t>(i)]));
    CHECK(m1.r[j] == static_cast<double>(ds.r[static_cast<size_t>(i)]));
  }

  Minibatch m3 = sample_minibatch(ds, 32, r1);
  CHECK(m1.idx != m3.idx);
}

TEST_CASE("minibatch indices are uniform-ish over the dataset") {
  EnvSpec bb = env_spec("bandit-bimodal");
  BehaviorMix mix;
  mix.low_mode = 0.5;
  mix.expert = 0.5;
  OfflineDataset ds = generate_dataset(bb, 10, mix, 6);
  Rng rng(13, 1);
  std::vector<int> counts(10, 0);
  const int draws = 20000;
  Minibatch m = sample_minibatch(ds, draws, rng);
  for (int64_t i : m.idx) counts[static_cast<size_t>(i)]++;
  for (int c : counts) {
    CHECK(c > draws / 10 - 600);
    CHECK(c < draws / 10 + 600);
  }
}
