#pragma once
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gfp {

enum class GuidanceMode { Softmax, Awr, Min, None, BcOnly };

GuidanceMode guidance_mode_from_string(const std::string& s);  // throws on unknown
std::string to_string(GuidanceMode m);

struct GuidanceConfig {
  GuidanceMode mode = GuidanceMode::Softmax;
  double eta = 1e-3;
  double awr_clip = 100.0;
  double lambda_floor = 1e-6;

  void validate() const;
};

// lambda = 1 / max(mean |q|, floor).
double lambda_scale(const Eigen::VectorXd& q_values, double lambda_floor);

// Logistic form of the two-point softmax: sigma(lambda * (q_data - q_actor) / eta).
// Stable for any eta > 0; never overflows.
double guidance_softmax(double q_data, double q_actor, double lambda, double eta);

// min(exp(lambda * (q_data - q_actor) / eta), awr_clip).
double guidance_awr(double q_data, double q_actor, double lambda, double eta, double awr_clip);

// sigma(lambda * (q_data - min(q_actor, q_flow)) / eta).
double guidance_min(double q_data, double q_actor, double q_flow, double lambda, double eta);

// For each threshold delta, the fraction of rows with g > delta.
std::map<double, double> guidance_stats(const Eigen::VectorXd& g,
                                        const std::vector<double>& deltas);

// The metrics thresholds: {0.01, 0.1, 0.25, 0.5, 0.75}.
const std::vector<double>& default_guidance_deltas();

}  // namespace gfp
