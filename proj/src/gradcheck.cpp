#include "gfp/gradcheck.hpp"

#include <cmath>
#include <memory>

#include "gfp/actor.hpp"
#include "gfp/critic.hpp"
#include "gfp/flow_policy.hpp"

namespace gfp {

namespace {

struct EntryRef {
  Eigen::MatrixXd* mat = nullptr;
  Eigen::VectorXd* vec = nullptr;
  Eigen::Index i = 0, j = 0;
  double get() const { return mat ? (*mat)(i, j) : (*vec)(i); }
  void set(double v) const {
    if (mat)
      (*mat)(i, j) = v;
    else
      (*vec)(i) = v;
  }
};

template <typename Fn>
void for_each_entry(ParamSet& p, size_t layer, const Fn& fn) {
  auto& l = p.layers[layer];
  for (Eigen::Index j = 0; j < l.W.cols(); ++j)
    for (Eigen::Index i = 0; i < l.W.rows(); ++i) fn("W", EntryRef{&l.W, nullptr, i, j});
  for (Eigen::Index i = 0; i < l.b.size(); ++i) fn("b", EntryRef{nullptr, &l.b, i, 0});
  for (Eigen::Index i = 0; i < l.ln_gain.size(); ++i)
    fn("ln_gain", EntryRef{nullptr, &l.ln_gain, i, 0});
  for (Eigen::Index i = 0; i < l.ln_offset.size(); ++i)
    fn("ln_offset", EntryRef{nullptr, &l.ln_offset, i, 0});
}

double layer_inf_norm(const DenseLayer& l) {
  double m = l.W.size() ? l.W.cwiseAbs().maxCoeff() : 0.0;
  if (l.b.size()) m = std::max(m, l.b.cwiseAbs().maxCoeff());
  if (l.ln_gain.size()) m = std::max(m, l.ln_gain.cwiseAbs().maxCoeff());
  if (l.ln_offset.size()) m = std::max(m, l.ln_offset.cwiseAbs().maxCoeff());
  return m;
}

}  // namespace

GradCheckReport grad_check(const std::vector<GradCheckProblem>& problems, double tolerance) {
  GradCheckReport report;
  report.tolerance = tolerance;
  for (const auto& prob : problems) {
    ParamSet work = prob.params;
    const ParamSet analytic = prob.grad(work);
    ParamSet numeric = zeros_like(work);

    for (size_t li = 0; li < work.layers.size(); ++li) {
      for_each_entry(work, li, [&](const char* /*kind*/, const EntryRef& ref) {
        const double p0 = ref.get();
        const double h = 1e-6 * (1.0 + std::abs(p0));
        ref.set(p0 + h);
        const double lp = prob.loss(work);
        ref.set(p0 - h);
        const double lm = prob.loss(work);
        ref.set(p0);
        // Mirror the entry location into the numeric gradient store.
        EntryRef dst = ref;
        auto& nl = numeric.layers[li];
        auto& wl = work.layers[li];
        if (ref.mat == &wl.W) dst.mat = &nl.W;
        if (ref.vec == &wl.b) dst.vec = &nl.b;
        if (ref.vec == &wl.ln_gain) dst.vec = &nl.ln_gain;
        if (ref.vec == &wl.ln_offset) dst.vec = &nl.ln_offset;
        dst.set((lp - lm) / (2.0 * h));
      });
    }

    for (size_t li = 0; li < work.layers.size(); ++li) {
      // Error scaled by the layer's dominant gradient magnitude: per-entry
      // division would amplify finite-difference noise on near-zero entries
      // far beyond the oracle's real resolution.
      const double denom = std::max({layer_inf_norm(analytic.layers[li]),
                                     layer_inf_norm(numeric.layers[li]), 1e-8});
      double max_err = 0.0;
      const auto& al = analytic.layers[li];
      const auto& nl = numeric.layers[li];
      max_err = std::max(max_err, al.W.size() ? (al.W - nl.W).cwiseAbs().maxCoeff() : 0.0);
      if (al.b.size()) max_err = std::max(max_err, (al.b - nl.b).cwiseAbs().maxCoeff());
      if (al.ln_gain.size())
        max_err = std::max(max_err, (al.ln_gain - nl.ln_gain).cwiseAbs().maxCoeff());
      if (al.ln_offset.size())
        max_err = std::max(max_err, (al.ln_offset - nl.ln_offset).cwiseAbs().maxCoeff());
      const double rel = max_err / denom;
      report.entries.push_back({prob.name, "layer" + std::to_string(li), rel});
      report.max_rel_err = std::max(report.max_rel_err, rel);
    }
  }
  report.passed = report.max_rel_err < tolerance;
  return report;
}

namespace {

// Squared-error objective against fixed targets through the plain MLP map.
GradCheckProblem mlp_problem(std::string name, const MlpSpec& spec, int batch, uint64_t seed) {
  Rng rng(seed, 0);
  ParamSet params = init_params(spec, rng);
  Eigen::MatrixXd x = rng.normal_matrix(spec.input_dim, batch);
  Eigen::MatrixXd y = rng.normal_matrix(spec.output_dim, batch);
  std::shared_ptr<Eigen::VectorXd> t;
  if (spec.time_embed_dim > 0) {
    t = std::make_shared<Eigen::VectorXd>(batch);
    for (int i = 0; i < batch; ++i) (*t)[i] = rng.next_double();
  }
  auto forward = [spec, x, t](const ParamSet& p, ForwardCache* cache) {
    return mlp_forward(spec, p, x, t ? t.get() : nullptr, cache);
  };
  GradCheckProblem prob;
  prob.name = std::move(name);
  prob.params = std::move(params);
  prob.loss = [forward, y](const ParamSet& p) {
    return 0.5 * (forward(p, nullptr) - y).squaredNorm();
  };
  prob.grad = [spec, forward, y](const ParamSet& p) {
    ForwardCache cache;
    const Eigen::MatrixXd out = forward(p, &cache);
    return mlp_backward(spec, p, cache, out - y);
  };
  return prob;
}

// One dense layer, quadratic loss — central differences are near-exact here,
// which pins the checker's own noise floor.
GradCheckProblem linear_problem(uint64_t seed) {
  Rng rng(seed, 1);
  const int out = 3, in = 4, batch = 5;
  ParamSet p;
  DenseLayer l;
  l.W = rng.normal_matrix(out, in);
  l.b = rng.normal_vector(out);
  p.layers.push_back(std::move(l));
  Eigen::MatrixXd x = rng.normal_matrix(in, batch);
  Eigen::MatrixXd y = rng.normal_matrix(out, batch);
  GradCheckProblem prob;
  prob.name = "linear_quadratic";
  prob.params = std::move(p);
  prob.loss = [x, y](const ParamSet& q) {
    const auto& l0 = q.layers[0];
    return 0.5 * (((l0.W * x).colwise() + l0.b) - y).squaredNorm();
  };
  prob.grad = [x, y](const ParamSet& q) {
    const auto& l0 = q.layers[0];
    const Eigen::MatrixXd e = ((l0.W * x).colwise() + l0.b) - y;
    ParamSet g = zeros_like(q);
    g.layers[0].W = e * x.transpose();
    g.layers[0].b = e.rowwise().sum();
    return g;
  };
  return prob;
}

// The TD regression loss is aggregation-independent (both heads regress the
// same fixed y), so one variant suffices.
GradCheckProblem critic_loss_problem(uint64_t seed) {
  Rng rng(seed, 2);
  const int sd = 2, ad = 2, batch = 6;
  auto ce = std::make_shared<CriticEnsemble>(
      make_critic(sd, ad, {12, 12}, Aggregation::Mean, 0.005, 0.99, rng));
  Eigen::MatrixXd s = rng.normal_matrix(sd, batch);
  Eigen::MatrixXd a = rng.normal_matrix(ad, batch);
  Eigen::VectorXd y = rng.normal_vector(batch);
  GradCheckProblem prob;
  prob.name = "critic_loss";
  prob.params = ce->q1;
  prob.loss = [ce, s, a, y](const ParamSet& p) {
    CriticEnsemble tmp = *ce;
    tmp.q1 = p;
    return critic_loss(tmp, s, a, y).loss;
  };
  prob.grad = [ce, s, a, y](const ParamSet& p) {
    CriticEnsemble tmp = *ce;
    tmp.q1 = p;
    return critic_loss(tmp, s, a, y).grads_q1;
  };
  return prob;
}

GradCheckProblem flow_loss_problem(uint64_t seed) {
  Rng rng(seed, 3);
  const int sd = 2, ad = 2, batch = 6;
  auto fp = std::make_shared<FlowPolicy>(make_flow_policy(sd, ad, {12}, 4, rng));
  Eigen::MatrixXd s = rng.normal_matrix(sd, batch);
  Eigen::MatrixXd a = rng.normal_matrix(ad, batch);
  Eigen::MatrixXd eps = rng.normal_matrix(ad, batch);
  Eigen::VectorXd g(batch);
  for (int i = 0; i < batch; ++i) g[i] = rng.next_double();
  Eigen::VectorXd t(batch);
  for (int i = 0; i < batch; ++i) t[i] = rng.next_double();
  GradCheckProblem prob;
  prob.name = "weighted_flow_loss";
  prob.params = fp->params;
  prob.loss = [fp, s, a, g, eps, t](const ParamSet& p) {
    FlowPolicy tmp = *fp;
    tmp.params = p;
    return weighted_fm_loss(tmp, s, a, g, eps, t).loss;
  };
  prob.grad = [fp, s, a, g, eps, t](const ParamSet& p) {
    FlowPolicy tmp = *fp;
    tmp.params = p;
    return weighted_fm_loss(tmp, s, a, g, eps, t).grads;
  };
  return prob;
}

// The composed objective: actor params through the actor net, the critic's
// action input, and the distillation term, exactly as actor_update sees it.
GradCheckProblem composed_actor_problem(uint64_t seed, Aggregation agg) {
  Rng rng(seed, 4);
  const int sd = 2, ad = 2, batch = 6;
  auto actor = std::make_shared<Actor>(make_actor(sd, ad, {10, 10}, 0.7, rng));
  auto ce = std::make_shared<CriticEnsemble>(
      make_critic(sd, ad, {10}, agg, 0.005, 0.99, rng));
  auto fp = std::make_shared<FlowPolicy>(make_flow_policy(sd, ad, {10}, 4, rng));
  Eigen::MatrixXd s = rng.normal_matrix(sd, batch);
  Eigen::MatrixXd z = rng.normal_matrix(ad, batch);
  const Eigen::MatrixXd flow_target = integrate(*fp, s, z);
  const double lambda = 1.7;
  GradCheckProblem prob;
  prob.name = std::string("composed_actor_") + (agg == Aggregation::Mean ? "mean" : "min");
  prob.params = actor->params;
  prob.loss = [actor, ce, s, z, flow_target, lambda](const ParamSet& p) {
    Actor tmp = *actor;
    tmp.params = p;
    return actor_loss(tmp, *ce, s, z, flow_target, lambda, true).loss;
  };
  prob.grad = [actor, ce, s, z, flow_target, lambda](const ParamSet& p) {
    Actor tmp = *actor;
    tmp.params = p;
    return actor_loss(tmp, *ce, s, z, flow_target, lambda, true).grads;
  };
  return prob;
}

}  // namespace

std::vector<GradCheckProblem> standard_gradcheck_problems(uint64_t seed) {
  std::vector<GradCheckProblem> probs;
  probs.push_back(linear_problem(seed));

  MlpSpec actor_shape{4, {16, 16}, 2, false, 0};
  probs.push_back(mlp_problem("actor_shape", actor_shape, 5, seed + 1));

  MlpSpec critic_shape{4, {16, 16}, 1, true, 0};
  probs.push_back(mlp_problem("critic_shape", critic_shape, 5, seed + 2));

  MlpSpec flow_shape{4, {16}, 2, false, 8};
  probs.push_back(mlp_problem("flow_shape_time_embed", flow_shape, 5, seed + 3));

  probs.push_back(critic_loss_problem(seed + 4));
  probs.push_back(flow_loss_problem(seed + 6));
  probs.push_back(composed_actor_problem(seed + 7, Aggregation::Mean));
  probs.push_back(composed_actor_problem(seed + 8, Aggregation::Min));
  return probs;
}

}  // namespace gfp
