#include <cmath>

#include <doctest.h>

#include "gfp/actor.hpp"
#include "gfp/adam.hpp"
#include "gfp/critic.hpp"
#include "gfp/flow_policy.hpp"
#include "gfp/guidance.hpp"
#include "gfp/rng.hpp"

using namespace gfp;

namespace {
constexpr int kPropertyTrials = 10000;

double rand_range(Rng& rng, double lo, double hi) { return rng.uniform(lo, hi); }
}  // namespace

TEST_CASE("guidance mode strings round-trip and reject typos") {
  for (const char* name : {"softmax", "awr", "min", "none", "bc-only"}) {
    CHECK(to_string(guidance_mode_from_string(name)) == name);
  }
  CHECK_THROWS_AS(guidance_mode_from_string("soft-max"), std::invalid_argument);
}

TEST_CASE("guidance config validation") {
  GuidanceConfig g;
  CHECK_NOTHROW(g.validate());
  g.eta = 0.0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g.eta = 1e-3;
  g.awr_clip = 0.5;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g.awr_clip = 100.0;
  g.lambda_floor = 0.0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("lambda normalizer") {
  Eigen::VectorXd q(2);
  q << 1.0, -3.0;
  CHECK(lambda_scale(q, 1e-6) == doctest::Approx(0.5).epsilon(1e-15));
  Eigen::VectorXd ones(4);
  ones << 1.0, -1.0, 1.0, -1.0;
  CHECK(lambda_scale(ones, 1e-6) == 1.0);
  CHECK(lambda_scale(Eigen::VectorXd::Zero(3), 1e-6) == doctest::Approx(1e6).epsilon(1e-12));
  CHECK_THROWS_AS(lambda_scale(Eigen::VectorXd(), 1e-6), std::invalid_argument);
}

TEST_CASE("softmax guidance frozen points") {
  CHECK(guidance_softmax(1.0, 0.0, 1.0, 1.0) == doctest::Approx(0.731059).epsilon(1e-6));
  CHECK(guidance_softmax(3.25, 3.25, 17.0, 1e-4) == 0.5);
  CHECK(guidance_softmax(0.1, 0.0, 1.0, 1e-9) > 1.0 - 1e-12);
  CHECK(guidance_softmax(0.1, 0.0, 1.0, 1e-9) <= 1.0);
}

TEST_CASE("awr guidance frozen points") {
  CHECK(guidance_awr(0.0, 0.0, 1.0, 1.0, 100.0) == 1.0);
  CHECK(guidance_awr(0.0, 0.5, 1.0, 1.0, 100.0) == doctest::Approx(0.606531).epsilon(1e-6));
  CHECK(guidance_awr(1e6, 0.0, 1.0, 1.0, 100.0) == 100.0);
  CHECK(guidance_awr(1.0, 0.0, 1.0, 1e-12, 37.5) == 37.5);
}

TEST_CASE("min guidance frozen points") {
  CHECK(guidance_min(1.0, 0.5, 0.0, 1.0, 1.0) == doctest::Approx(0.731059).epsilon(1e-6));
  CHECK(guidance_min(0.25, 0.25, 0.9, 1.0, 1.0) == 0.5);
  // q_flow above q_actor collapses to the plain softmax, bitwise.
  CHECK(guidance_min(0.3, -0.2, 5.0, 2.0, 1e-3) == guidance_softmax(0.3, -0.2, 2.0, 1e-3));
}

TEST_CASE("softmax range, symmetry point, and shift invariance hold on random inputs") {
  Rng rng(101, 0);
  for (int i = 0; i < kPropertyTrials; ++i) {
    // Dyadic inputs (multiples of 1/8) keep every shifted sum exactly
    // representable, so shift invariance can be asserted bitwise. Arguments
    // are kept below the double-precision saturation point of the logistic
    // (~36.7) so the strict interior is representable.
    const double qd = std::round(rand_range(rng, -16.0, 16.0)) / 8.0;
    const double qa = std::round(rand_range(rng, -16.0, 16.0)) / 8.0;
    const double lam = rand_range(rng, 0.25, 4.0);
    const double eta = rand_range(rng, 0.5, 8.0);
    const double g = guidance_softmax(qd, qa, lam, eta);
    CHECK(g > 0.0);
    CHECK(g < 1.0);
    CHECK(std::isfinite(g));
    const double c = std::round(rand_range(rng, -4000.0, 4000.0)) / 8.0;
    CHECK(guidance_softmax(qd + c, qa + c, lam, eta) == g);
    CHECK(guidance_softmax(qd, qd, lam, eta) == 0.5);
  }
}

TEST_CASE("softmax saturates cleanly instead of overflowing at extreme inputs") {
  Rng rng(106, 0);
  for (int i = 0; i < kPropertyTrials; ++i) {
    const double qd = rand_range(rng, -50.0, 50.0);
    const double qa = rand_range(rng, -50.0, 50.0);
    const double lam = std::exp(rand_range(rng, -6.0, 6.0));
    const double eta = std::exp(rand_range(rng, -300.0, 4.0));
    const double g = guidance_softmax(qd, qa, lam, eta);
    CHECK(std::isfinite(g));
    CHECK(g >= 0.0);
    CHECK(g <= 1.0);
  }
  CHECK(guidance_softmax(1.0, 0.0, 1.0, 1e-300) == 1.0);
  CHECK(guidance_softmax(0.0, 1.0, 1.0, 1e-300) == 0.0);
}

TEST_CASE("softmax is strictly increasing in q_data") {
  Rng rng(102, 0);
  for (int i = 0; i < kPropertyTrials; ++i) {
    // Bounded so the increment stays far above one ULP of the result.
    const double qa = rand_range(rng, -4.0, 4.0);
    const double qd = rand_range(rng, -4.0, 4.0);
    const double lam = rand_range(rng, 0.25, 2.0);
    const double eta = rand_range(rng, 1.0, 4.0);
    const double step = rand_range(rng, 1e-3, 1.0);
    CHECK(guidance_softmax(qd + step, qa, lam, eta) > guidance_softmax(qd, qa, lam, eta));
  }
}

TEST_CASE("high temperature flattens the softmax toward 0.5") {
  Rng rng(103, 0);
  for (int i = 0; i < kPropertyTrials; ++i) {
    const double qd = rand_range(rng, -10.0, 10.0);
    const double qa = rand_range(rng, -10.0, 10.0);
    const double lam = std::exp(rand_range(rng, -3.0, 3.0));
    const double eta = 1e9 * lam * std::abs(qd - qa) + 1e-30;
    CHECK(std::abs(guidance_softmax(qd, qa, lam, eta) - 0.5) < 1e-6);
  }
}

TEST_CASE("min guidance dominates the plain softmax and collapses on ordered inputs") {
  Rng rng(104, 0);
  for (int i = 0; i < kPropertyTrials; ++i) {
    const double qd = rand_range(rng, -10.0, 10.0);
    const double qa = rand_range(rng, -10.0, 10.0);
    const double qf = rand_range(rng, -10.0, 10.0);
    const double lam = std::exp(rand_range(rng, -3.0, 3.0));
    const double eta = std::exp(rand_range(rng, -6.0, 2.0));
    const double g_min = guidance_min(qd, qa, qf, lam, eta);
    const double g_soft = guidance_softmax(qd, qa, lam, eta);
    if (qf < qa) {
      CHECK(g_min >= g_soft);
    } else {
      CHECK(g_min == g_soft);
    }
  }
}

TEST_CASE("awr stays within [0, clip] and engages the clip exactly") {
  Rng rng(105, 0);
  for (int i = 0; i < kPropertyTrials; ++i) {
    const double qd = rand_range(rng, -20.0, 20.0);
    const double qa = rand_range(rng, -20.0, 20.0);
    const double lam = std::exp(rand_range(rng, -3.0, 3.0));
    const double eta = std::exp(rand_range(rng, -6.0, 2.0));
    const double clip = 100.0;
    const double g = guidance_awr(qd, qa, lam, eta, clip);
    CHECK(g >= 0.0);
    CHECK(g <= clip);
    CHECK(std::isfinite(g));
    if (lam * (qd - qa) / eta >= std::log(clip)) CHECK(g == clip);
  }
}

TEST_CASE("guidance stats count threshold exceedances") {
  Eigen::VectorXd g = Eigen::VectorXd::Constant(8, 0.5);
  auto stats = guidance_stats(g, {0.01, 0.75});
  CHECK(stats.at(0.01) == 1.0);
  CHECK(stats.at(0.75) == 0.0);

  Eigen::VectorXd mixed(4);
  mixed << 0.05, 0.2, 0.6, 0.9;
  auto s2 = guidance_stats(mixed, default_guidance_deltas());
  CHECK(s2.at(0.01) == 1.0);
  CHECK(s2.at(0.1) == 0.75);
  CHECK(s2.at(0.25) == 0.5);
  CHECK(s2.at(0.5) == 0.5);
  CHECK(s2.at(0.75) == 0.25);
  // Fractions are non-increasing in the threshold.
  double prev = 1.1;
  for (double d : default_guidance_deltas()) {
    CHECK(s2.at(d) <= prev);
    prev = s2.at(d);
  }
}

TEST_CASE("default deltas are the metrics thresholds") {
  const auto& d = default_guidance_deltas();
  REQUIRE(d.size() == 5);
  CHECK(d[0] == 0.01);
  CHECK(d[1] == 0.1);
  CHECK(d[2] == 0.25);
  CHECK(d[3] == 0.5);
  CHECK(d[4] == 0.75);
}

TEST_CASE("actor basics: clipping, determinism, zero head") {
  Rng rng(1, 0);
  Actor actor = make_actor(1, 1, {8}, 1.0, rng);
  Rng noise(2, 0);
  Eigen::MatrixXd s = noise.normal_matrix(1, 4);
  Eigen::MatrixXd z = noise.normal_matrix(1, 4);

  Eigen::MatrixXd a1 = actor_sample(actor, s, z);
  Eigen::MatrixXd a2 = actor_sample(actor, s, z);
  CHECK((a1 - a2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a1.cwiseAbs().maxCoeff() <= 1.0);

  Actor zeroed = actor;
  zeroed.params = shaped_zeros(actor.spec);
  CHECK(actor_sample(zeroed, s, z).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(actor_sample(actor, s, noise.normal_matrix(2, 4)), std::invalid_argument);
  CHECK_THROWS_AS(actor_sample(actor, s, noise.normal_matrix(1, 3)), std::invalid_argument);

  actor.alpha = -0.5;
  CHECK_THROWS_AS(actor.validate(), std::invalid_argument);
}

TEST_CASE("raw forward feeds the critic; the emitted action is its clip") {
  Rng rng(3, 0);
  Actor actor = make_actor(1, 1, {8}, 1.0, rng);
  // Blow up the output layer so the raw output exits [-1, 1].
  actor.params.layers.back().W *= 50.0;
  Rng noise(4, 0);
  Eigen::MatrixXd s = noise.normal_matrix(1, 8);
  Eigen::MatrixXd z = noise.normal_matrix(1, 8);
  Eigen::MatrixXd raw = actor_forward_raw(actor, s, z);
  Eigen::MatrixXd clipped = actor_sample(actor, s, z);
  CHECK(raw.cwiseAbs().maxCoeff() > 1.0);
  CHECK(clipped.cwiseAbs().maxCoeff() <= 1.0);
  for (int j = 0; j < 8; ++j) {
    CHECK(clipped(0, j) == std::clamp(raw(0, j), -1.0, 1.0));
  }
}

TEST_CASE("actor loss frozen point: lambda=1, Q=2, alpha=10, gap norm 0.04 gives -1.6") {
  // Critic whose target value is Q(s, a) = 2 regardless of the action: zero
  // weights, output bias 2. The actor is zero-initialized so mu_theta = 0,
  // and the flow target is fixed at 0.2: ||0 - 0.2||^2 = 0.04.
  Rng rng(5, 0);
  CriticEnsemble ce = make_critic(1, 1, {4}, Aggregation::Mean, 0.005, 0.99, rng);
  ce.q1 = shaped_zeros(ce.spec);
  ce.q2 = shaped_zeros(ce.spec);
  ce.q1.layers.back().b[0] = 2.0;
  ce.q2.layers.back().b[0] = 2.0;

  Actor actor = make_actor(1, 1, {4}, 10.0, rng);
  actor.params = shaped_zeros(actor.spec);

  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(1, 1);
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(1, 1);
  Eigen::MatrixXd flow_target = Eigen::MatrixXd::Constant(1, 1, 0.2);
  ActorLossResult res = actor_loss(actor, ce, s, z, flow_target, 1.0, true);
  CHECK(res.loss == doctest::Approx(-1.6).epsilon(1e-12));
}

TEST_CASE("constant critic contributes no actor gradient") {
  Rng rng(7, 0);
  CriticEnsemble ce = make_critic(1, 1, {4}, Aggregation::Mean, 0.005, 0.99, rng);
  ce.q1 = shaped_zeros(ce.spec);
  ce.q2 = shaped_zeros(ce.spec);
  ce.q1.layers.back().b[0] = 3.0;
  ce.q2.layers.back().b[0] = 3.0;
  Actor actor = make_actor(1, 1, {4}, 0.0, rng);
  Rng noise(8, 0);
  Eigen::MatrixXd s = noise.normal_matrix(1, 4);
  Eigen::MatrixXd z = noise.normal_matrix(1, 4);
  ActorLossResult res =
      actor_loss(actor, ce, s, z, Eigen::MatrixXd::Zero(1, 4), 2.0, true);
  CHECK(res.loss == doctest::Approx(-6.0).epsilon(1e-12));
  for (const auto& l : res.grads.layers) {
    CHECK(l.W.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(l.b.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("perfect distillation with a zero critic gives zero loss") {
  Rng rng(9, 0);
  CriticEnsemble ce = make_critic(1, 1, {4}, Aggregation::Mean, 0.005, 0.99, rng);
  ce.q1 = shaped_zeros(ce.spec);
  ce.q2 = shaped_zeros(ce.spec);
  Actor actor = make_actor(1, 1, {4}, 1.0, rng);
  actor.params = shaped_zeros(actor.spec);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(1, 3);
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(1, 3);
  // mu_theta == 0 == flow target, Q == 0.
  ActorLossResult res = actor_loss(actor, ce, s, z, Eigen::MatrixXd::Zero(1, 3), 1.0, true);
  CHECK(res.loss == 0.0);
}

TEST_CASE("bc-only drops the Q term") {
  Rng rng(11, 0);
  CriticEnsemble ce = make_critic(1, 1, {4}, Aggregation::Mean, 0.005, 0.99, rng);
  ce.q1 = shaped_zeros(ce.spec);
  ce.q2 = shaped_zeros(ce.spec);
  ce.q1.layers.back().b[0] = 5.0;
  ce.q2.layers.back().b[0] = 5.0;
  Actor actor = make_actor(1, 1, {4}, 10.0, rng);
  actor.params = shaped_zeros(actor.spec);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(1, 1);
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(1, 1);
  Eigen::MatrixXd flow_target = Eigen::MatrixXd::Constant(1, 1, 0.2);
  ActorLossResult with_q = actor_loss(actor, ce, s, z, flow_target, 1.0, true);
  ActorLossResult without_q = actor_loss(actor, ce, s, z, flow_target, 1.0, false);
  CHECK(with_q.loss == doctest::Approx(-5.0 + 0.4).epsilon(1e-12));
  CHECK(without_q.loss == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("actor gradients are exact against finite differences through the critic") {
  Rng rng(13, 0);
  CriticEnsemble ce = make_critic(2, 1, {8}, Aggregation::Mean, 0.005, 0.99, rng);
  Actor actor = make_actor(2, 1, {6}, 0.7, rng);
  Rng noise(14, 0);
  Eigen::MatrixXd s = noise.normal_matrix(2, 3);
  Eigen::MatrixXd z = noise.normal_matrix(1, 3);
  Eigen::MatrixXd flow_target = 0.5 * noise.normal_matrix(1, 3);
  const double lambda = 1.7;

  ActorLossResult res = actor_loss(actor, ce, s, z, flow_target, lambda, true);
  auto loss_at = [&](const ParamSet& p) {
    Actor probe = actor;
    probe.params = p;
    return actor_loss(probe, ce, s, z, flow_target, lambda, true).loss;
  };
  const double h = 1e-6;
  for (int r = 0; r < 3; ++r) {
    ParamSet up = actor.params, dn = actor.params;
    up.layers[0].W(r, 0) += h;
    dn.layers[0].W(r, 0) -= h;
    const double fd = (loss_at(up) - loss_at(dn)) / (2 * h);
    CHECK(res.grads.layers[0].W(r, 0) == doctest::Approx(fd).epsilon(1e-4));
  }
  ParamSet up = actor.params, dn = actor.params;
  up.layers.back().b[0] += h;
  dn.layers.back().b[0] -= h;
  const double fd = (loss_at(up) - loss_at(dn)) / (2 * h);
  CHECK(res.grads.layers.back().b[0] == doctest::Approx(fd).epsilon(1e-4));
}

TEST_CASE("min-aggregated critics route actor gradients through the smaller head") {
  Rng rng(15, 0);
  CriticEnsemble ce = make_critic(1, 1, {8}, Aggregation::Min, 0.005, 0.99, rng);
  Actor actor = make_actor(1, 1, {6}, 0.0, rng);
  Rng noise(16, 0);
  Eigen::MatrixXd s = noise.normal_matrix(1, 2);
  Eigen::MatrixXd z = noise.normal_matrix(1, 2);
  ActorLossResult res =
      actor_loss(actor, ce, s, z, Eigen::MatrixXd::Zero(1, 2), 1.0, true);
  auto loss_at = [&](const ParamSet& p) {
    Actor probe = actor;
    probe.params = p;
    return actor_loss(probe, ce, s, z, Eigen::MatrixXd::Zero(1, 2), 1.0, true).loss;
  };
  const double h = 1e-6;
  ParamSet up = actor.params, dn = actor.params;
  up.layers[0].W(0, 0) += h;
  dn.layers[0].W(0, 0) -= h;
  const double fd = (loss_at(up) - loss_at(dn)) / (2 * h);
  CHECK(res.grads.layers[0].W(0, 0) == doctest::Approx(fd).epsilon(1e-4));
}

TEST_CASE("actor_update applies one adam step and uses the flow target at the same z") {
  Rng rng(17, 0);
  CriticEnsemble ce = make_critic(1, 1, {8}, Aggregation::Mean, 0.005, 0.99, rng);
  Actor actor = make_actor(1, 1, {8}, 1.0, rng);
  FlowPolicy flow = make_flow_policy(1, 1, {8}, 4, rng);
  AdamState adam = AdamState::make(actor.params, 3e-4);
  Rng noise(18, 0);
  Eigen::MatrixXd s = noise.normal_matrix(1, 16);
  Eigen::MatrixXd z = noise.normal_matrix(1, 16);

  Actor manual = actor;
  AdamState manual_adam = AdamState::make(manual.params, 3e-4);
  Eigen::MatrixXd flow_target = integrate(flow, s, z);
  ActorLossResult manual_res =
      actor_loss(manual, ce, s, z, flow_target, 0.5, true);
  adam_step(manual.params, manual_res.grads, manual_adam);

  double loss = actor_update(actor, ce, flow, s, z, 0.5, true, adam);
  CHECK(loss == manual_res.loss);
  CHECK(adam.step == 1);
  for (size_t li = 0; li < actor.params.layers.size(); ++li) {
    CHECK((actor.params.layers[li].W - manual.params.layers[li].W).cwiseAbs().maxCoeff() == 0.0);
  }
}
