#pragma once
#include "gfp/mlp.hpp"

namespace gfp {

struct AdamState {
  ParamSet m;  // first moments
  ParamSet v;  // second moments
  long long step = 0;
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState make(const ParamSet& shaped, double lr);
};

// Standard bias-corrected Adam. Throws std::runtime_error on a non-finite
// gradient entry — instabilities abort instead of being clamped away.
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state);

// target <- (1 - tau) * target + tau * online, elementwise.
void polyak_update(ParamSet& target, const ParamSet& online, double tau);

}  // namespace gfp
