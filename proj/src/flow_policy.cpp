#include "gfp/flow_policy.hpp"

#include <sstream>
#include <stdexcept>

namespace gfp {

namespace {
constexpr int kTimeEmbedDim = 64;
}

void FlowPolicy::validate() const {
  spec.validate();
  if (euler_steps < 1) throw std::invalid_argument("FlowPolicy: euler_steps must be >= 1");
  if (action_dim < 1 || spec.output_dim != action_dim)
    throw std::invalid_argument("FlowPolicy: output dim must equal action_dim");
  if (spec.time_embed_dim == 0)
    throw std::invalid_argument("FlowPolicy: velocity field needs a time embedding");
}

FlowPolicy make_flow_policy(int state_dim, int action_dim, const std::vector<int>& hidden_dims,
                            int euler_steps, Rng& rng) {
  FlowPolicy fp;
  fp.spec.input_dim = state_dim + action_dim;
  fp.spec.hidden_dims = hidden_dims;
  fp.spec.output_dim = action_dim;
  fp.spec.use_layer_norm = false;
  fp.spec.time_embed_dim = kTimeEmbedDim;
  fp.euler_steps = euler_steps;
  fp.action_dim = action_dim;
  fp.params = init_params(fp.spec, rng);
  fp.validate();
  return fp;
}

namespace {
Eigen::MatrixXd stack_sx(const FlowPolicy& fp, const Eigen::MatrixXd& s,
                         const Eigen::MatrixXd& x) {
  if (s.cols() != x.cols() || x.rows() != fp.action_dim ||
      s.rows() + x.rows() != fp.spec.input_dim) {
    std::ostringstream os;
    os << "velocity_eval: got state " << s.rows() << "x" << s.cols() << ", point " << x.rows()
       << "x" << x.cols() << " for input_dim " << fp.spec.input_dim;
    throw std::invalid_argument(os.str());
  }
  Eigen::MatrixXd in(fp.spec.input_dim, s.cols());
  in.topRows(s.rows()) = s;
  in.bottomRows(x.rows()) = x;
  return in;
}
}  // namespace

Eigen::MatrixXd velocity_eval(const FlowPolicy& fp, double t, const Eigen::MatrixXd& s,
                              const Eigen::MatrixXd& x) {
  const Eigen::VectorXd tv = Eigen::VectorXd::Constant(s.cols(), t);
  return velocity_eval(fp, tv, s, x);
}

Eigen::MatrixXd velocity_eval(const FlowPolicy& fp, const Eigen::VectorXd& t,
                              const Eigen::MatrixXd& s, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd in = stack_sx(fp, s, x);
  return mlp_forward(fp.spec, fp.params, in, &t);
}

Eigen::MatrixXd integrate_with(
    const std::function<Eigen::MatrixXd(double, const Eigen::MatrixXd&, const Eigen::MatrixXd&)>&
        vel,
    const Eigen::MatrixXd& s, Eigen::MatrixXd z, int euler_steps) {
  if (euler_steps < 1) throw std::invalid_argument("integrate: euler_steps must be >= 1");
  const double inv_m = 1.0 / euler_steps;
  for (int k = 0; k < euler_steps; ++k) {
    const double t = static_cast<double>(k) * inv_m;
    z += inv_m * vel(t, s, z);
    if (!z.allFinite()) {
      std::ostringstream os;
      os << "integrate: non-finite flow state after Euler step " << k;
      throw std::runtime_error(os.str());
    }
  }
  return z.cwiseMax(-1.0).cwiseMin(1.0);
}

Eigen::MatrixXd integrate(const FlowPolicy& fp, const Eigen::MatrixXd& s, Eigen::MatrixXd z) {
  return integrate_with(
      [&fp](double t, const Eigen::MatrixXd& ss, const Eigen::MatrixXd& x) {
        return velocity_eval(fp, t, ss, x);
      },
      s, std::move(z), fp.euler_steps);
}

FlowLossResult weighted_fm_loss(const FlowPolicy& fp, const Eigen::MatrixXd& s,
                                const Eigen::MatrixXd& a, const Eigen::VectorXd& g,
                                const Eigen::MatrixXd& eps, const Eigen::VectorXd& t) {
  const Eigen::Index b = s.cols();
  if (a.cols() != b || eps.cols() != b || g.size() != b || t.size() != b)
    throw std::invalid_argument("weighted_fm_loss: batch sizes disagree");
  if (a.rows() != fp.action_dim || eps.rows() != fp.action_dim)
    throw std::invalid_argument("weighted_fm_loss: action rows must equal action_dim");

  // a_t = (1 - t) * eps + t * a, one t per column.
  Eigen::MatrixXd a_t(a.rows(), b);
  for (Eigen::Index c = 0; c < b; ++c)
    a_t.col(c) = (1.0 - t[c]) * eps.col(c) + t[c] * a.col(c);

  const Eigen::MatrixXd in = stack_sx(fp, s, a_t);
  ForwardCache cache;
  const Eigen::MatrixXd v = mlp_forward(fp.spec, fp.params, in, &t, &cache);
  const Eigen::MatrixXd resid = v - (a - eps);

  FlowLossResult out;
  double loss = 0.0;
  for (Eigen::Index c = 0; c < b; ++c) loss += g[c] * resid.col(c).squaredNorm();
  out.loss = loss / static_cast<double>(b);

  // d loss / d v = 2 g resid / B, per column.
  Eigen::MatrixXd dv(resid.rows(), b);
  const double scale = 2.0 / static_cast<double>(b);
  for (Eigen::Index c = 0; c < b; ++c) dv.col(c) = (scale * g[c]) * resid.col(c);
  out.grads = mlp_backward(fp.spec, fp.params, cache, dv);
  return out;
}

FlowLossResult fm_bc_loss(const FlowPolicy& fp, const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                          const Eigen::MatrixXd& eps, const Eigen::VectorXd& t) {
  return weighted_fm_loss(fp, s, a, Eigen::VectorXd::Ones(s.cols()), eps, t);
}

Eigen::VectorXd sample_action(const FlowPolicy& fp, const Eigen::VectorXd& s, Rng& rng) {
  return integrate(fp, s, rng.normal_matrix(fp.action_dim, 1));
}

}  // namespace gfp
