#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pcnlab/simd_tanh.hpp"

namespace pcnlab {

using Vector = std::vector<double>;

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense row-major matrix of doubles. Dimension mismatches in any operation
// throw ShapeError; nothing is ever broadcast or truncated silently.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // rows*cols, row-major

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

  double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }
  const double* row(int i) const { return data.data() + static_cast<size_t>(i) * cols; }
  double* row(int i) { return data.data() + static_cast<size_t>(i) * cols; }
  size_t size() const { return data.size(); }

  bool operator==(const Matrix&) const = default;
};

// Deterministic RNG. The raw stream comes from std::mt19937_64, whose output
// is pinned by the standard, and every derived quantity (uniform, normal,
// shuffle) is built here from documented arithmetic rather than the
// implementation-defined std <random> distributions. Same seed, same stream,
// on every platform.
class SeededRng {
 public:
  explicit SeededRng(uint64_t seed) : seed_(seed), gen_(seed) {}

  uint64_t seed() const { return seed_; }
  uint64_t next_u64() { return gen_(); }

  // [0, 1), 53-bit resolution
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Box-Muller; the second variate of each pair is cached and returned on the
  // next call.
  double normal(double mean, double stddev);

  // unbiased integer in [0, n) via rejection
  uint64_t below(uint64_t n);

  // Fisher-Yates
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent child stream keyed on (label, a, b). Does not disturb this
  // stream. Used so that every phase of a run (weight init, per-epoch
  // shuffles, per-batch state inits, eval inits) draws from its own stream,
  // which makes runs resumable at epoch granularity without replaying.
  SeededRng derive(std::string_view label, uint64_t a = 0, uint64_t b = 0) const;

 private:
  uint64_t seed_;
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// State for one Adam-optimized parameter tensor (flattened).
struct AdamState {
  Vector m;  // first moment
  Vector v;  // second moment
  int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// weights(rows x cols) * input(cols) + bias(rows)
Vector affine(const Matrix& weights, const Vector& input, const Vector& bias);

// weights(rows x cols)^T * input(rows)
Vector matvec_transposed(const Matrix& weights, const Vector& input);

Vector tanh_map(const Vector& x);
// 1 - tanh(x)^2
Vector tanh_deriv(const Vector& x);

// n iid draws from N(mean, stddev^2); stddev must be >= 0
Vector gaussian_sample(SeededRng& rng, double mean, double stddev, size_t n);

void sgd_step(double* param, const double* grad, size_t n, double lr);
void sgd_step(Vector& param, const Vector& grad, double lr);
void sgd_step(Matrix& param, const Matrix& grad, double lr);

// Standard Adam with bias correction; advances state by one step.
void adam_step(AdamState& state, double* param, const double* grad, size_t n, double lr);
void adam_step(AdamState& state, Vector& param, const Vector& grad, double lr);
void adam_step(AdamState& state, Matrix& param, const Matrix& grad, double lr);

// Central differences (f(x+h*e_i) - f(x-h*e_i)) / 2h. Test oracle.
Vector finite_diff_grad(const std::function<double(const Vector&)>& f, const Vector& x,
                        double h);

namespace detail {
uint64_t splitmix64(uint64_t x);
uint64_t fnv1a64(std::string_view s);
}  // namespace detail

}  // namespace pcnlab
