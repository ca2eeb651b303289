#pragma once
#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace gfp {

// Deterministic PRNG: xoshiro256** seeded through splitmix64.
// Every consumer of randomness in the engine owns one of these, constructed
// from (seed, stream) so that independent noise roles never share a sequence.
// The four state words are the complete state: normal draws never cache a
// spare variate across calls, which keeps checkpointed state minimal.
class Rng {
 public:
  Rng(uint64_t seed, uint64_t stream);
  explicit Rng(const std::array<uint64_t, 4>& state) : s_(state) {}

  uint64_t next_u64();
  // Uniform in [0, 1), 53-bit resolution.
  double next_double();
  double uniform(double lo, double hi);
  // Standard normals via Box-Muller on consecutive uniforms. A call producing
  // n draws consumes exactly 2*ceil(n/2) uniforms; an odd tail discards the
  // second variate of its pair.
  double next_normal();
  std::vector<double> normal_vec(int n);
  Eigen::MatrixXd normal_matrix(int rows, int cols);
  Eigen::VectorXd normal_vector(int n);

  std::array<uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<uint64_t, 4>& s) { s_ = s; }

 private:
  std::array<uint64_t, 4> s_{};
};

uint64_t splitmix64_next(uint64_t& state);

// The raw Box-Muller map, exposed for direct numeric checks.
// u1 in (0,1], u2 in [0,1): returns (r*cos(2*pi*u2), r*sin(2*pi*u2)) with
// r = sqrt(-2 ln u1). A u1 of zero is clamped to 2^-53.
std::pair<double, double> box_muller(double u1, double u2);

}  // namespace gfp
