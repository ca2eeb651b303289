#include "gfp/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace gfp {

AdamState AdamState::make(const ParamSet& shaped, double lr) {
  AdamState st;
  st.m = zeros_like(shaped);
  st.v = zeros_like(shaped);
  st.learning_rate = lr;
  return st;
}

namespace {
void adam_apply(Eigen::Ref<Eigen::MatrixXd> p, const Eigen::Ref<const Eigen::MatrixXd>& g,
                Eigen::Ref<Eigen::MatrixXd> m, Eigen::Ref<Eigen::MatrixXd> v,
                const AdamState& st, double bc1, double bc2) {
  if (!g.allFinite())
    throw std::runtime_error("adam_step: non-finite gradient at step " +
                             std::to_string(st.step));
  m = st.beta1 * m + (1.0 - st.beta1) * g;
  v.array() = st.beta2 * v.array() + (1.0 - st.beta2) * g.array().square();
  const auto m_hat = m.array() / bc1;
  const auto v_hat = v.array() / bc2;
  p.array() -= st.learning_rate * m_hat / (v_hat.sqrt() + st.eps);
}
}  // namespace

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state) {
  if (params.layers.size() != grads.layers.size() ||
      params.layers.size() != state.m.layers.size())
    throw std::invalid_argument("adam_step: parameter/gradient/state layer counts differ");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.layers.size(); ++i) {
    auto& pl = params.layers[i];
    const auto& gl = grads.layers[i];
    auto& ml = state.m.layers[i];
    auto& vl = state.v.layers[i];
    if (pl.W.rows() != gl.W.rows() || pl.W.cols() != gl.W.cols() || pl.b.size() != gl.b.size() ||
        pl.ln_gain.size() != gl.ln_gain.size())
      throw std::invalid_argument("adam_step: layer " + std::to_string(i) + " shape mismatch");
    adam_apply(pl.W, gl.W, ml.W, vl.W, state, bc1, bc2);
    adam_apply(pl.b, gl.b, ml.b, vl.b, state, bc1, bc2);
    if (pl.ln_gain.size()) {
      adam_apply(pl.ln_gain, gl.ln_gain, ml.ln_gain, vl.ln_gain, state, bc1, bc2);
      adam_apply(pl.ln_offset, gl.ln_offset, ml.ln_offset, vl.ln_offset, state, bc1, bc2);
    }
  }
}

void polyak_update(ParamSet& target, const ParamSet& online, double tau) {
  if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("polyak_update: tau must be in [0,1]");
  if (target.layers.size() != online.layers.size())
    throw std::invalid_argument("polyak_update: layer counts differ");
  for (size_t i = 0; i < target.layers.size(); ++i) {
    auto& t = target.layers[i];
    const auto& o = online.layers[i];
    if (t.W.rows() != o.W.rows() || t.W.cols() != o.W.cols() || t.b.size() != o.b.size() ||
        t.ln_gain.size() != o.ln_gain.size())
      throw std::invalid_argument("polyak_update: layer " + std::to_string(i) + " shape mismatch");
    t.W = (1.0 - tau) * t.W + tau * o.W;
    t.b = (1.0 - tau) * t.b + tau * o.b;
    if (t.ln_gain.size()) {
      t.ln_gain = (1.0 - tau) * t.ln_gain + tau * o.ln_gain;
      t.ln_offset = (1.0 - tau) * t.ln_offset + tau * o.ln_offset;
    }
  }
}

}  // namespace gfp
