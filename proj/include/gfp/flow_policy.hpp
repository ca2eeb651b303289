#pragma once
#include <functional>

#include <Eigen/Core>

#include "gfp/mlp.hpp"
#include "gfp/rng.hpp"

namespace gfp {

// Multi-step flow-matching policy: a velocity field v(t, s, x) over action
// space, sampled by explicit Euler integration from Gaussian noise.
struct FlowPolicy {
  MlpSpec spec;       // input_dim = state_dim + action_dim, time embedding on
  ParamSet params;
  int euler_steps = 10;
  int action_dim = 0;

  void validate() const;
};

FlowPolicy make_flow_policy(int state_dim, int action_dim, const std::vector<int>& hidden_dims,
                            int euler_steps, Rng& rng);

// v(t, s, x) with one shared t for the whole batch (integration) or one t
// per column (training). Columns are samples.
Eigen::MatrixXd velocity_eval(const FlowPolicy& fp, double t, const Eigen::MatrixXd& s,
                              const Eigen::MatrixXd& x);
Eigen::MatrixXd velocity_eval(const FlowPolicy& fp, const Eigen::VectorXd& t,
                              const Eigen::MatrixXd& s, const Eigen::MatrixXd& x);

// x <- x + (1/M) * vel(k/M, s, x) for k = 0..M-1, then clip to [-1, 1].
// The generic form backs the Euler-consistency tests; `integrate` uses the
// policy's own velocity field. Throws on a non-finite intermediate, naming
// the Euler step.
Eigen::MatrixXd integrate_with(
    const std::function<Eigen::MatrixXd(double, const Eigen::MatrixXd&, const Eigen::MatrixXd&)>&
        vel,
    const Eigen::MatrixXd& s, Eigen::MatrixXd z, int euler_steps);
Eigen::MatrixXd integrate(const FlowPolicy& fp, const Eigen::MatrixXd& s, Eigen::MatrixXd z);

struct FlowLossResult {
  double loss = 0.0;
  ParamSet grads;
};

// Weighted flow-matching BC: with a_t = (1-t)*eps + t*a per column,
// loss = mean_i g_i * ||v(t_i, s_i, a_t_i) - (a_i - eps_i)||^2.
// Weights are constants (no gradient through g).
FlowLossResult weighted_fm_loss(const FlowPolicy& fp, const Eigen::MatrixXd& s,
                                const Eigen::MatrixXd& a, const Eigen::VectorXd& g,
                                const Eigen::MatrixXd& eps, const Eigen::VectorXd& t);
// The unweighted loss is the weighted loss with unit weights (bit-for-bit).
FlowLossResult fm_bc_loss(const FlowPolicy& fp, const Eigen::MatrixXd& s,
                          const Eigen::MatrixXd& a, const Eigen::MatrixXd& eps,
                          const Eigen::VectorXd& t);

// integrate() on a single state with fresh noise from rng.
Eigen::VectorXd sample_action(const FlowPolicy& fp, const Eigen::VectorXd& s, Rng& rng);

}  // namespace gfp
