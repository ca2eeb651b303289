#pragma once
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gfp/rng.hpp"

namespace gfp {

// Network shape description. input_dim counts only the raw features; when
// time_embed_dim > 0 the embedding is appended internally, so the first
// layer's fan-in is input_dim + time_embed_dim.
struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden_dims;
  int output_dim = 0;
  bool use_layer_norm = false;
  int time_embed_dim = 0;

  void validate() const;  // throws std::invalid_argument on a bad shape
  int first_layer_in() const { return input_dim + time_embed_dim; }
  bool operator==(const MlpSpec&) const = default;
};

// One dense layer. ln_gain/ln_offset are sized only for hidden layers of a
// layer-norm network; they stay empty otherwise (and always for the output
// layer, which is linear with no normalization or activation).
struct DenseLayer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;  // out
  Eigen::VectorXd ln_gain;
  Eigen::VectorXd ln_offset;
};

// Doubles as parameter storage, gradient storage, and Adam moment storage —
// all three are shaped identically.
struct ParamSet {
  std::vector<DenseLayer> layers;

  void set_zero();
  bool all_finite() const;
  double max_abs() const;
  long long entry_count() const;
};

ParamSet zeros_like(const ParamSet& p);
// Zero-valued ParamSet with the shapes the spec dictates.
ParamSet shaped_zeros(const MlpSpec& spec);
// LeCun-normal weights (std = 1/sqrt(fan_in)), zero biases, unit gains,
// zero offsets. Draw order: weights of layer 0 in column-major storage
// order, then layer 1, ... Biases and norm params consume no draws.
ParamSet init_params(const MlpSpec& spec, Rng& rng);
void check_shapes(const MlpSpec& spec, const ParamSet& p, const std::string& who);

double gelu(double x);
double gelu_derivative(double x);
// (x - mean) / sqrt(pop_var + 1e-6), then gain*(.) + offset.
Eigen::VectorXd layer_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& gain,
                           const Eigen::VectorXd& offset);
// Sinusoidal embedding of flow time: p = 1000*t, h = dim/2,
// f_i = exp(-ln(10000) * i/(h-1)), output = [sin(p f_i)..., cos(p f_i)...].
Eigen::VectorXd time_embed(double t, int dim);

// Activations cached by the forward pass, sufficient for exact reverse-mode
// gradients. `input` holds the assembled first-layer input (embedding rows
// included), one column per sample.
struct ForwardCache {
  MlpSpec spec;
  Eigen::MatrixXd input;
  struct Layer {
    Eigen::MatrixXd z;        // linear output
    Eigen::VectorXd mean;     // per-column LN stats (layer-norm nets only)
    Eigen::VectorXd inv_std;
    Eigen::MatrixXd xhat;     // normalized pre-affine (layer-norm nets only)
    Eigen::MatrixXd y;        // GeLU input (post-LN, or z when no LN)
    Eigen::MatrixXd act;      // GeLU output
  };
  std::vector<Layer> hidden;
};

// Columns are samples. `t` must be present iff spec.time_embed_dim > 0 and
// then holds one time per column. Returns output_dim x batch.
Eigen::MatrixXd mlp_forward(const MlpSpec& spec, const ParamSet& params,
                            const Eigen::MatrixXd& inputs,
                            const Eigen::VectorXd* t = nullptr,
                            ForwardCache* cache = nullptr);

// dOut is output_dim x batch, the gradient of the loss w.r.t. the forward
// output. Returns parameter gradients; optionally also the gradient w.r.t.
// the raw (non-embedding) input rows via dInput.
ParamSet mlp_backward(const MlpSpec& spec, const ParamSet& params,
                      const ForwardCache& cache, const Eigen::MatrixXd& dOut,
                      Eigen::MatrixXd* dInput = nullptr);

}  // namespace gfp
