#include "gfp/mlp.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace gfp {

namespace {
constexpr double kLnEps = 1e-6;
const double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

[[noreturn]] void shape_error(const std::string& who, const std::string& what) {
  throw std::invalid_argument(who + ": " + what);
}
}  // namespace

void MlpSpec::validate() const {
  if (input_dim < 1) throw std::invalid_argument("MlpSpec: input_dim must be >= 1");
  if (output_dim < 1) throw std::invalid_argument("MlpSpec: output_dim must be >= 1");
  if (hidden_dims.empty()) throw std::invalid_argument("MlpSpec: hidden_dims must be non-empty");
  for (int h : hidden_dims)
    if (h < 1) throw std::invalid_argument("MlpSpec: hidden dims must be >= 1");
  if (time_embed_dim < 0) throw std::invalid_argument("MlpSpec: time_embed_dim must be >= 0");
  if (time_embed_dim != 0 && time_embed_dim % 2 != 0)
    throw std::invalid_argument("MlpSpec: time_embed_dim must be even when nonzero");
}

void ParamSet::set_zero() {
  for (auto& l : layers) {
    l.W.setZero();
    l.b.setZero();
    if (l.ln_gain.size()) l.ln_gain.setZero();
    if (l.ln_offset.size()) l.ln_offset.setZero();
  }
}

bool ParamSet::all_finite() const {
  for (const auto& l : layers) {
    if (!l.W.allFinite() || !l.b.allFinite()) return false;
    if (l.ln_gain.size() && !l.ln_gain.allFinite()) return false;
    if (l.ln_offset.size() && !l.ln_offset.allFinite()) return false;
  }
  return true;
}

double ParamSet::max_abs() const {
  double m = 0.0;
  for (const auto& l : layers) {
    m = std::max(m, l.W.cwiseAbs().maxCoeff());
    if (l.b.size()) m = std::max(m, l.b.cwiseAbs().maxCoeff());
    if (l.ln_gain.size()) m = std::max(m, l.ln_gain.cwiseAbs().maxCoeff());
    if (l.ln_offset.size()) m = std::max(m, l.ln_offset.cwiseAbs().maxCoeff());
  }
  return m;
}

long long ParamSet::entry_count() const {
  long long n = 0;
  for (const auto& l : layers)
    n += l.W.size() + l.b.size() + l.ln_gain.size() + l.ln_offset.size();
  return n;
}

ParamSet zeros_like(const ParamSet& p) {
  ParamSet z;
  z.layers.resize(p.layers.size());
  for (size_t i = 0; i < p.layers.size(); ++i) {
    z.layers[i].W = Eigen::MatrixXd::Zero(p.layers[i].W.rows(), p.layers[i].W.cols());
    z.layers[i].b = Eigen::VectorXd::Zero(p.layers[i].b.size());
    z.layers[i].ln_gain = Eigen::VectorXd::Zero(p.layers[i].ln_gain.size());
    z.layers[i].ln_offset = Eigen::VectorXd::Zero(p.layers[i].ln_offset.size());
  }
  return z;
}

ParamSet shaped_zeros(const MlpSpec& spec) {
  spec.validate();
  ParamSet p;
  int in = spec.first_layer_in();
  const size_t n_hidden = spec.hidden_dims.size();
  for (size_t i = 0; i <= n_hidden; ++i) {
    const int out = i < n_hidden ? spec.hidden_dims[i] : spec.output_dim;
    DenseLayer l;
    l.W = Eigen::MatrixXd::Zero(out, in);
    l.b = Eigen::VectorXd::Zero(out);
    if (spec.use_layer_norm && i < n_hidden) {
      l.ln_gain = Eigen::VectorXd::Zero(out);
      l.ln_offset = Eigen::VectorXd::Zero(out);
    }
    p.layers.push_back(std::move(l));
    in = out;
  }
  return p;
}

ParamSet init_params(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  ParamSet p;
  int in = spec.first_layer_in();
  const size_t n_hidden = spec.hidden_dims.size();
  for (size_t i = 0; i <= n_hidden; ++i) {
    const int out = i < n_hidden ? spec.hidden_dims[i] : spec.output_dim;
    DenseLayer l;
    l.W.resize(out, in);
    const double std_dev = 1.0 / std::sqrt(static_cast<double>(in));
    const auto draws = rng.normal_vec(out * in);
    // Column-major storage order, matching the documented draw order.
    for (int c = 0, k = 0; c < in; ++c)
      for (int r = 0; r < out; ++r, ++k) l.W(r, c) = std_dev * draws[static_cast<size_t>(k)];
    l.b = Eigen::VectorXd::Zero(out);
    if (spec.use_layer_norm && i < n_hidden) {
      l.ln_gain = Eigen::VectorXd::Ones(out);
      l.ln_offset = Eigen::VectorXd::Zero(out);
    }
    p.layers.push_back(std::move(l));
    in = out;
  }
  return p;
}

void check_shapes(const MlpSpec& spec, const ParamSet& p, const std::string& who) {
  spec.validate();
  const size_t want = spec.hidden_dims.size() + 1;
  if (p.layers.size() != want) {
    std::ostringstream os;
    os << "expected " << want << " layers, got " << p.layers.size();
    shape_error(who, os.str());
  }
  int in = spec.first_layer_in();
  for (size_t i = 0; i < want; ++i) {
    const int out = i < spec.hidden_dims.size() ? spec.hidden_dims[i] : spec.output_dim;
    const auto& l = p.layers[i];
    if (l.W.rows() != out || l.W.cols() != in || l.b.size() != out) {
      std::ostringstream os;
      os << "layer " << i << " shape mismatch: W is " << l.W.rows() << "x" << l.W.cols()
         << ", b is " << l.b.size() << ", expected " << out << "x" << in;
      shape_error(who, os.str());
    }
    const bool wants_ln = spec.use_layer_norm && i < spec.hidden_dims.size();
    const int ln_want = wants_ln ? out : 0;
    if (l.ln_gain.size() != ln_want || l.ln_offset.size() != ln_want) {
      std::ostringstream os;
      os << "layer " << i << " norm-param mismatch: have " << l.ln_gain.size()
         << ", expected " << ln_want;
      shape_error(who, os.str());
    }
    in = out;
  }
}

// The complementary form keeps the left tail representable where
// 1 + erf(x/sqrt(2)) would round to zero.
double gelu(double x) { return x * 0.5 * std::erfc(-x * kInvSqrt2); }

double gelu_derivative(double x) {
  const double phi_cdf = 0.5 * std::erfc(-x * kInvSqrt2);
  const double phi_pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  return phi_cdf + x * phi_pdf;
}

Eigen::VectorXd layer_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& gain,
                           const Eigen::VectorXd& offset) {
  if (x.size() < 2 || gain.size() != x.size() || offset.size() != x.size())
    throw std::invalid_argument("layer_norm: inputs must share a length >= 2");
  const double mean = x.mean();
  const double var = (x.array() - mean).square().mean();
  const double inv_std = 1.0 / std::sqrt(var + kLnEps);
  return (gain.array() * ((x.array() - mean) * inv_std) + offset.array()).matrix();
}

Eigen::VectorXd time_embed(double t, int dim) {
  if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("time_embed: dim must be even and >= 2");
  const int h = dim / 2;
  const double p = 1000.0 * t;
  Eigen::VectorXd out(dim);
  for (int i = 0; i < h; ++i) {
    const double f = h == 1 ? 1.0 : std::exp(-std::log(10000.0) * i / (h - 1));
    out[i] = std::sin(p * f);
    out[h + i] = std::cos(p * f);
  }
  return out;
}

namespace {
// Assemble the first-layer input: raw features with the per-column time
// embedding appended underneath when the spec calls for one.
Eigen::MatrixXd assemble_input(const MlpSpec& spec, const Eigen::MatrixXd& inputs,
                               const Eigen::VectorXd* t) {
  if (inputs.rows() != spec.input_dim) {
    std::ostringstream os;
    os << "input has " << inputs.rows() << " rows, spec wants " << spec.input_dim;
    shape_error("mlp_forward", os.str());
  }
  if (spec.time_embed_dim == 0) {
    if (t) shape_error("mlp_forward", "time batch supplied but time_embed_dim is 0");
    return inputs;
  }
  if (!t) shape_error("mlp_forward", "time batch required when time_embed_dim > 0");
  if (t->size() != inputs.cols()) {
    std::ostringstream os;
    os << "time batch has " << t->size() << " entries for " << inputs.cols() << " columns";
    shape_error("mlp_forward", os.str());
  }
  Eigen::MatrixXd x(spec.first_layer_in(), inputs.cols());
  x.topRows(spec.input_dim) = inputs;
  for (Eigen::Index c = 0; c < inputs.cols(); ++c)
    x.block(spec.input_dim, c, spec.time_embed_dim, 1) = time_embed((*t)[c], spec.time_embed_dim);
  return x;
}
}  // namespace

Eigen::MatrixXd mlp_forward(const MlpSpec& spec, const ParamSet& params,
                            const Eigen::MatrixXd& inputs, const Eigen::VectorXd* t,
                            ForwardCache* cache) {
  check_shapes(spec, params, "mlp_forward");
  Eigen::MatrixXd x = assemble_input(spec, inputs, t);
  if (cache) {
    cache->spec = spec;
    cache->input = x;
    cache->hidden.clear();
    cache->hidden.resize(spec.hidden_dims.size());
  }
  const size_t n_hidden = spec.hidden_dims.size();
  for (size_t i = 0; i < n_hidden; ++i) {
    const auto& l = params.layers[i];
    Eigen::MatrixXd z = (l.W * x).colwise() + l.b;
    Eigen::MatrixXd y;
    ForwardCache::Layer* lc = cache ? &cache->hidden[i] : nullptr;
    if (spec.use_layer_norm) {
      const Eigen::Index n = z.rows();
      Eigen::VectorXd mean(z.cols()), inv_std(z.cols());
      Eigen::MatrixXd xhat(z.rows(), z.cols());
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        const double mu = z.col(c).mean();
        const double var = (z.col(c).array() - mu).square().sum() / static_cast<double>(n);
        const double is = 1.0 / std::sqrt(var + kLnEps);
        mean[c] = mu;
        inv_std[c] = is;
        xhat.col(c) = (z.col(c).array() - mu) * is;
      }
      y = (xhat.array().colwise() * l.ln_gain.array()).colwise() + l.ln_offset.array();
      if (lc) {
        lc->mean = std::move(mean);
        lc->inv_std = std::move(inv_std);
        lc->xhat = std::move(xhat);
      }
    } else {
      y = z;
    }
    Eigen::MatrixXd act = y.unaryExpr([](double v) { return gelu(v); });
    if (lc) {
      lc->z = std::move(z);
      lc->y = y;
      lc->act = act;
    }
    x = std::move(act);
  }
  const auto& out_layer = params.layers[n_hidden];
  return (out_layer.W * x).colwise() + out_layer.b;
}

ParamSet mlp_backward(const MlpSpec& spec, const ParamSet& params, const ForwardCache& cache,
                      const Eigen::MatrixXd& dOut, Eigen::MatrixXd* dInput) {
  check_shapes(spec, params, "mlp_backward");
  if (!(cache.spec == spec))
    shape_error("mlp_backward", "cache was produced under a different spec");
  if (cache.hidden.size() != spec.hidden_dims.size())
    shape_error("mlp_backward", "cache layer count does not match spec");
  const Eigen::Index batch = cache.input.cols();
  if (dOut.rows() != spec.output_dim || dOut.cols() != batch) {
    std::ostringstream os;
    os << "dOut is " << dOut.rows() << "x" << dOut.cols() << ", expected " << spec.output_dim
       << "x" << batch;
    shape_error("mlp_backward", os.str());
  }
  for (size_t i = 0; i < cache.hidden.size(); ++i) {
    if (cache.hidden[i].y.rows() != spec.hidden_dims[i] || cache.hidden[i].y.cols() != batch)
      shape_error("mlp_backward", "cache activations do not match spec (stale cache?)");
  }

  ParamSet grads = zeros_like(params);
  const size_t n_hidden = spec.hidden_dims.size();

  // Output layer.
  const Eigen::MatrixXd& last_act = n_hidden ? cache.hidden[n_hidden - 1].act : cache.input;
  grads.layers[n_hidden].W.noalias() = dOut * last_act.transpose();
  grads.layers[n_hidden].b = dOut.rowwise().sum();
  Eigen::MatrixXd da = params.layers[n_hidden].W.transpose() * dOut;

  for (size_t ii = n_hidden; ii-- > 0;) {
    const auto& lc = cache.hidden[ii];
    const auto& l = params.layers[ii];
    // Through GeLU.
    Eigen::MatrixXd dy =
        da.array() * lc.y.unaryExpr([](double v) { return gelu_derivative(v); }).array();
    Eigen::MatrixXd dz;
    if (spec.use_layer_norm) {
      grads.layers[ii].ln_gain = (dy.array() * lc.xhat.array()).rowwise().sum();
      grads.layers[ii].ln_offset = dy.rowwise().sum();
      Eigen::MatrixXd dxhat = dy.array().colwise() * l.ln_gain.array();
      dz.resize(dxhat.rows(), dxhat.cols());
      const double n = static_cast<double>(dxhat.rows());
      for (Eigen::Index c = 0; c < dxhat.cols(); ++c) {
        const double sum_dx = dxhat.col(c).sum();
        const double sum_dx_xhat = dxhat.col(c).dot(lc.xhat.col(c));
        dz.col(c) = (lc.inv_std[c] / n) *
                    (n * dxhat.col(c).array() - sum_dx - lc.xhat.col(c).array() * sum_dx_xhat);
      }
    } else {
      dz = std::move(dy);
    }
    const Eigen::MatrixXd& prev = ii == 0 ? cache.input : cache.hidden[ii - 1].act;
    grads.layers[ii].W.noalias() = dz * prev.transpose();
    grads.layers[ii].b = dz.rowwise().sum();
    if (ii > 0 || dInput) da.noalias() = l.W.transpose() * dz;
    if (ii == 0 && dInput) *dInput = da.topRows(spec.input_dim);
  }
  return grads;
}

}  // namespace gfp
