#include "pcnlab/numerics.hpp"

#include <cmath>
#include <cstdio>

namespace pcnlab {

// ---------------------------------------------------------------------------
// SeededRng
// ---------------------------------------------------------------------------

double SeededRng::normal(double mean, double stddev) {
  if (has_spare_) {
    has_spare_ = false;
    return mean + stddev * spare_;
  }
  // u1 in (0, 1] so the log is finite
  double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 6.283185307179586476925287 * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return mean + stddev * r * std::cos(a);
}

uint64_t SeededRng::below(uint64_t n) {
  if (n == 0) throw std::invalid_argument("SeededRng::below: n must be positive");
  uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

SeededRng SeededRng::derive(std::string_view label, uint64_t a, uint64_t b) const {
  uint64_t h = detail::fnv1a64(label);
  h = detail::splitmix64(h ^ detail::splitmix64(seed_));
  h = detail::splitmix64(h ^ detail::splitmix64(a + 0x9e3779b97f4a7c15ull));
  h = detail::splitmix64(h ^ detail::splitmix64(b + 0x517cc1b727220a95ull));
  return SeededRng(h);
}

namespace detail {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void shape_fail(const char* op, const std::string& detail) {
  throw ShapeError(std::string(op) + ": " + detail);
}

std::string dims(size_t a, size_t b) { return std::to_string(a) + " vs " + std::to_string(b); }

}  // namespace

Vector affine(const Matrix& weights, const Vector& input, const Vector& bias) {
  if (static_cast<size_t>(weights.cols) != input.size())
    shape_fail("affine", "weights.cols != input.len: " + dims(weights.cols, input.size()));
  if (static_cast<size_t>(weights.rows) != bias.size())
    shape_fail("affine", "weights.rows != bias.len: " + dims(weights.rows, bias.size()));
  Vector out(weights.rows);
  for (int i = 0; i < weights.rows; ++i) {
    const double* w = weights.row(i);
    double acc = 0.0;
    for (int j = 0; j < weights.cols; ++j) acc += w[j] * input[j];
    out[i] = acc + bias[i];
  }
  return out;
}

Vector matvec_transposed(const Matrix& weights, const Vector& input) {
  if (static_cast<size_t>(weights.rows) != input.size())
    shape_fail("matvec_transposed", "weights.rows != input.len: " + dims(weights.rows, input.size()));
  Vector out(weights.cols, 0.0);
  for (int i = 0; i < weights.rows; ++i) {
    const double* w = weights.row(i);
    double s = input[i];
    for (int j = 0; j < weights.cols; ++j) out[j] += w[j] * s;
  }
  return out;
}

Vector tanh_map(const Vector& x) {
  Vector out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = tanh_fast(x[i]);
  return out;
}

Vector tanh_deriv(const Vector& x) {
  Vector out(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    double t = tanh_fast(x[i]);
    out[i] = 1.0 - t * t;
  }
  return out;
}

Vector gaussian_sample(SeededRng& rng, double mean, double stddev, size_t n) {
  if (stddev < 0.0) throw std::invalid_argument("gaussian_sample: negative stddev");
  Vector out(n);
  for (size_t i = 0; i < n; ++i) out[i] = rng.normal(mean, stddev);
  return out;
}

void sgd_step(double* param, const double* grad, size_t n, double lr) {
  for (size_t i = 0; i < n; ++i) param[i] -= lr * grad[i];
}

void sgd_step(Vector& param, const Vector& grad, double lr) {
  if (param.size() != grad.size())
    shape_fail("sgd_step", "param/grad size: " + dims(param.size(), grad.size()));
  sgd_step(param.data(), grad.data(), param.size(), lr);
}

void sgd_step(Matrix& param, const Matrix& grad, double lr) {
  if (param.rows != grad.rows || param.cols != grad.cols)
    shape_fail("sgd_step", "param/grad shape mismatch");
  sgd_step(param.data.data(), grad.data.data(), param.size(), lr);
}

void adam_step(AdamState& state, double* param, const double* grad, size_t n, double lr) {
  if (state.m.size() != n || state.v.size() != n)
    shape_fail("adam_step", "state/param size: " + dims(state.m.size(), n));
  state.step += 1;
  double b1 = state.beta1, b2 = state.beta2;
  double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (size_t i = 0; i < n; ++i) {
    double g = grad[i];
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
    double mhat = state.m[i] / c1;
    double vhat = state.v[i] / c2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
  }
}

void adam_step(AdamState& state, Vector& param, const Vector& grad, double lr) {
  if (param.size() != grad.size())
    shape_fail("adam_step", "param/grad size: " + dims(param.size(), grad.size()));
  adam_step(state, param.data(), grad.data(), param.size(), lr);
}

void adam_step(AdamState& state, Matrix& param, const Matrix& grad, double lr) {
  if (param.rows != grad.rows || param.cols != grad.cols)
    shape_fail("adam_step", "param/grad shape mismatch");
  adam_step(state, param.data.data(), grad.data.data(), param.size(), lr);
}

Vector finite_diff_grad(const std::function<double(const Vector&)>& f, const Vector& x,
                        double h) {
  if (h <= 0.0) throw std::invalid_argument("finite_diff_grad: h must be positive");
  Vector grad(x.size());
  Vector probe = x;
  for (size_t i = 0; i < x.size(); ++i) {
    double orig = probe[i];
    probe[i] = orig + h;
    double fp = f(probe);
    probe[i] = orig - h;
    double fm = f(probe);
    probe[i] = orig;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace pcnlab
