#include "gfp/rng.hpp"

#include <cmath>
#include <numbers>

namespace gfp {

uint64_t splitmix64_next(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {
inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

Rng::Rng(uint64_t seed, uint64_t stream) {
  // Expand (seed, stream) through splitmix64: key the chain with the seed,
  // fold the stream id into the chain output, then draw the four state words.
  uint64_t cur = seed;
  for (;;) {
    uint64_t sm = splitmix64_next(cur) ^ stream;
    for (auto& w : s_) w = splitmix64_next(sm);
    if (s_[0] | s_[1] | s_[2] | s_[3]) break;
    ++cur;  // an all-zero state would lock xoshiro in place; retry perturbed
  }
}

uint64_t Rng::next_u64() {
  const uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

std::pair<double, double> box_muller(double u1, double u2) {
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

double Rng::next_normal() {
  const double u1 = next_double();
  const double u2 = next_double();
  return box_muller(u1, u2).first;
}

std::vector<double> Rng::normal_vec(int n) {
  std::vector<double> out(static_cast<size_t>(n));
  for (int i = 0; i < n; i += 2) {
    const double u1 = next_double();
    const double u2 = next_double();
    auto [z0, z1] = box_muller(u1, u2);
    out[static_cast<size_t>(i)] = z0;
    if (i + 1 < n) out[static_cast<size_t>(i + 1)] = z1;
  }
  return out;
}

Eigen::MatrixXd Rng::normal_matrix(int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  const auto v = normal_vec(rows * cols);
  // Column-major fill so a matrix draw equals the flat vector draw reshaped.
  for (int c = 0, k = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r, ++k) m(r, c) = v[static_cast<size_t>(k)];
  return m;
}

Eigen::VectorXd Rng::normal_vector(int n) {
  Eigen::VectorXd v(n);
  const auto raw = normal_vec(n);
  for (int i = 0; i < n; ++i) v[i] = raw[static_cast<size_t>(i)];
  return v;
}

}  // namespace gfp
