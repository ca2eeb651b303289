#include "gfp/guidance.hpp"

#include <cmath>
#include <stdexcept>

namespace gfp {

GuidanceMode guidance_mode_from_string(const std::string& s) {
  if (s == "softmax") return GuidanceMode::Softmax;
  if (s == "awr") return GuidanceMode::Awr;
  if (s == "min") return GuidanceMode::Min;
  if (s == "none") return GuidanceMode::None;
  if (s == "bc-only") return GuidanceMode::BcOnly;
  throw std::invalid_argument("unknown guidance mode '" + s +
                              "' (expected softmax|awr|min|none|bc-only)");
}

std::string to_string(GuidanceMode m) {
  switch (m) {
    case GuidanceMode::Softmax: return "softmax";
    case GuidanceMode::Awr: return "awr";
    case GuidanceMode::Min: return "min";
    case GuidanceMode::None: return "none";
    case GuidanceMode::BcOnly: return "bc-only";
  }
  return "softmax";
}

void GuidanceConfig::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("guidance.eta must be > 0");
  if (!(awr_clip >= 1.0)) throw std::invalid_argument("guidance.awr_clip must be >= 1");
  if (!(lambda_floor > 0.0)) throw std::invalid_argument("guidance.lambda_floor must be > 0");
}

double lambda_scale(const Eigen::VectorXd& q_values, double lambda_floor) {
  if (q_values.size() == 0) throw std::invalid_argument("lambda_scale: empty Q batch");
  const double mean_abs = q_values.cwiseAbs().mean();
  return 1.0 / std::max(mean_abs, lambda_floor);
}

namespace {
// Logistic that never overflows: for x <= 0 use exp(x)/(1+exp(x)).
double sigma(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

double guidance_softmax(double q_data, double q_actor, double lambda, double eta) {
  return sigma(lambda * (q_data - q_actor) / eta);
}

double guidance_awr(double q_data, double q_actor, double lambda, double eta, double awr_clip) {
  const double x = lambda * (q_data - q_actor) / eta;
  // Exponent capped so the clip engages before exp can overflow.
  if (x >= std::log(awr_clip)) return awr_clip;
  return std::exp(x);
}

double guidance_min(double q_data, double q_actor, double q_flow, double lambda, double eta) {
  return sigma(lambda * (q_data - std::min(q_actor, q_flow)) / eta);
}

std::map<double, double> guidance_stats(const Eigen::VectorXd& g,
                                        const std::vector<double>& deltas) {
  std::map<double, double> out;
  const double n = static_cast<double>(g.size());
  for (double d : deltas) {
    double count = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i)
      if (g[i] > d) count += 1.0;
    out[d] = n > 0.0 ? count / n : 0.0;
  }
  return out;
}

const std::vector<double>& default_guidance_deltas() {
  static const std::vector<double> kDeltas{0.01, 0.1, 0.25, 0.5, 0.75};
  return kDeltas;
}

}  // namespace gfp
