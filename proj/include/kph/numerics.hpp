#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

namespace kph {

// Streaming pairwise summation.  Partial sums are merged along a binary
// counter, so the reduction tree depends only on how many terms were added,
// never on threading or chunking.  total() folds the open levels from the
// most recent block to the oldest.
class PairwiseAccumulator {
 public:
  void add(double x) {
    std::uint64_t c = count_++;
    while (c & 1u) {
      x += levels_.back();
      levels_.pop_back();
      c >>= 1;
    }
    levels_.push_back(x);
  }

  double total() const {
    double s = 0.0;
    for (auto it = levels_.rbegin(); it != levels_.rend(); ++it) s += *it;
    return s;
  }

  std::uint64_t count() const { return count_; }

 private:
  std::vector<double> levels_;
  std::uint64_t count_ = 0;
};

inline double pairwise_sum(const double* v, std::size_t n) {
  PairwiseAccumulator acc;
  for (std::size_t i = 0; i < n; ++i) acc.add(v[i]);
  return acc.total();
}

// Small deterministic PRNG (splitmix64) so seeded runs produce identical
// streams on every platform, unlike distribution wrappers in <random>.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  Eigen::VectorXd normal_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  Eigen::MatrixXd normal_matrix(int rows, int cols) {
    Eigen::MatrixXd a(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) a(i, j) = normal();
    return a;
  }

  Eigen::MatrixXd uniform_matrix(int rows, int cols, double lo, double hi) {
    Eigen::MatrixXd a(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) a(i, j) = uniform(lo, hi);
    return a;
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace kph
