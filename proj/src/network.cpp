#include "pcnlab/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pcnlab {

NetworkTopology::NetworkTopology(std::vector<int> sizes) : layer_sizes(std::move(sizes)) {
  if (layer_sizes.size() < 2)
    throw std::invalid_argument("NetworkTopology: need at least 2 layers");
  for (int s : layer_sizes)
    if (s <= 0) throw std::invalid_argument("NetworkTopology: layer sizes must be positive");
}

ClampMask ClampMask::none(const NetworkTopology& topo) {
  ClampMask m;
  m.fixed.resize(topo.num_layers());
  for (int n = 0; n < topo.num_layers(); ++n) m.fixed[n].assign(topo.size(n), 0);
  return m;
}

bool ClampMask::any_free(int layer) const {
  for (uint8_t f : fixed[layer])
    if (!f) return true;
  return false;
}

bool ClampMask::all_fixed(int layer) const { return !any_free(layer); }

NetworkParams init_network(const NetworkTopology& topo, SeededRng& rng) {
  NetworkParams p;
  p.topology = topo;
  int L = topo.num_layers();
  p.weights.reserve(L - 1);
  p.biases.reserve(L - 1);
  for (int n = 0; n < L - 1; ++n) {
    int fan_in = topo.size(n);
    int out = topo.size(n + 1);
    double std = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(out, fan_in);
    for (double& x : w.data) x = rng.normal(0.0, std);
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(out, 0.0);
  }
  return p;
}

ActivationState init_state(const NetworkTopology& topo, const ClampSpec& clamps,
                           SeededRng& rng) {
  int L = topo.num_layers();
  if (static_cast<int>(clamps.mask.fixed.size()) != L)
    throw ShapeError("init_state: clamp mask layer count != topology");
  ActivationState s;
  s.mu.resize(L);
  s.errors.resize(L);
  for (int n = 0; n < L; ++n) {
    int sz = topo.size(n);
    if (static_cast<int>(clamps.mask.fixed[n].size()) != sz)
      throw ShapeError("init_state: clamp mask size mismatch at layer " + std::to_string(n));
    s.mu[n].resize(sz);
    for (int j = 0; j < sz; ++j) {
      if (clamps.mask.fixed[n][j]) {
        if (static_cast<int>(clamps.values[n].size()) != sz)
          throw ShapeError("init_state: clamp values size mismatch at layer " +
                           std::to_string(n));
        s.mu[n][j] = clamps.values[n][j];
      } else {
        s.mu[n][j] = rng.normal(0.5, 0.05);
      }
    }
  }
  return s;
}

Vector predict_layer(const NetworkParams& params, const ActivationState& state, int n) {
  int L = params.topology.num_layers();
  if (n < 0 || n >= L - 1)
    throw std::out_of_range("predict_layer: layer " + std::to_string(n) + " has no layer below");
  return tanh_map(affine(params.weights[n], state.mu[n], params.biases[n]));
}

void compute_errors(ActivationState& state, const NetworkParams& params) {
  int L = params.topology.num_layers();
  for (int n = 0; n < L - 1; ++n) {
    Vector pred = predict_layer(params, state, n);
    Vector& e = state.errors[n + 1];
    e.resize(pred.size());
    for (size_t j = 0; j < pred.size(); ++j) e[j] = state.mu[n + 1][j] - pred[j];
  }
}

double free_energy(const ActivationState& state, const NetworkParams& params,
                   const PrecisionConfig& prec) {
  int L = params.topology.num_layers();
  double f = 0.0;
  for (int n = 1; n < L; ++n) {
    double inv = prec.inverse(n);
    double q = 0.0;
    for (double e : state.errors[n]) q += e * e;
    f += 0.5 * inv * q;
  }
  return f;
}

std::vector<Vector> node_gradients(const ActivationState& state, const NetworkParams& params,
                                   const ClampMask& mask, const PrecisionConfig& prec) {
  int L = params.topology.num_layers();
  std::vector<Vector> grads(L);
  for (int n = 0; n < L; ++n) {
    int sz = params.topology.size(n);
    grads[n].assign(sz, 0.0);
    if (!mask.any_free(n)) continue;

    Vector g(sz, 0.0);
    if (n > 0) {
      // top-down term: Sigma_n^-1 eps_n
      double inv = prec.inverse(n);
      for (int j = 0; j < sz; ++j) g[j] = inv * state.errors[n][j];
    }
    if (n < L - 1) {
      // bottom-up term: -W^T (Sigma_{n+1}^-1 eps_{n+1} * f'(W mu + b))
      Vector pre = affine(params.weights[n], state.mu[n], params.biases[n]);
      double inv = prec.inverse(n + 1);
      Vector gated(pre.size());
      for (size_t j = 0; j < pre.size(); ++j) {
        double t = tanh_fast(pre[j]);
        gated[j] = inv * state.errors[n + 1][j] * (1.0 - t * t);
      }
      Vector up = matvec_transposed(params.weights[n], gated);
      for (int j = 0; j < sz; ++j) g[j] -= up[j];
    }
    for (int j = 0; j < sz; ++j)
      if (!mask.fixed[n][j]) grads[n][j] = g[j];
  }
  return grads;
}

void infer(ActivationState& state, const NetworkParams& params, const ClampMask& mask,
           const PrecisionConfig& prec, int iterations, double node_lr, InferTrace* trace) {
  if (iterations < 0) throw std::invalid_argument("infer: iterations must be >= 0");
  int L = params.topology.num_layers();
  for (int it = 0; it < iterations; ++it) {
    compute_errors(state, params);
    if (trace) {
      trace->free_energy.push_back(free_energy(state, params, prec));
      if (trace->readout_layer >= 0) trace->readout.push_back(state.mu[trace->readout_layer]);
    }
    std::vector<Vector> grads = node_gradients(state, params, mask, prec);
    for (int n = 0; n < L; ++n)
      if (mask.any_free(n)) sgd_step(state.mu[n], grads[n], node_lr);
  }
  compute_errors(state, params);
}

WeightGradients weight_gradients(const ActivationState& state, const NetworkParams& params,
                                 const PrecisionConfig& prec) {
  int L = params.topology.num_layers();
  WeightGradients g;
  g.dw.reserve(L - 1);
  g.db.reserve(L - 1);
  for (int n = 0; n < L - 1; ++n) {
    Vector pre = affine(params.weights[n], state.mu[n], params.biases[n]);
    double inv = prec.inverse(n + 1);
    int out = params.topology.size(n + 1);
    int in = params.topology.size(n);
    Matrix dw(out, in);
    Vector db(out);
    for (int i = 0; i < out; ++i) {
      double t = tanh_fast(pre[i]);
      double gated = inv * state.errors[n + 1][i] * (1.0 - t * t);
      // dF/dW = -(gated error) outer mu; dF/db = -(gated error)
      db[i] = -gated;
      double* row = dw.row(i);
      for (int j = 0; j < in; ++j) row[j] = -gated * state.mu[n][j];
    }
    g.dw.push_back(std::move(dw));
    g.db.push_back(std::move(db));
  }
  return g;
}

NetworkParams ablate(const NetworkParams& params, int k) {
  int L = params.topology.num_layers();
  if (k < 0 || k > L - 2)
    throw std::invalid_argument("ablate: k must be in [0, " + std::to_string(L - 2) + "], got " +
                                std::to_string(k));
  NetworkParams out;
  out.topology = NetworkTopology(std::vector<int>(params.topology.layer_sizes.begin() + k,
                                                  params.topology.layer_sizes.end()));
  out.weights.assign(params.weights.begin() + k, params.weights.end());
  out.biases.assign(params.biases.begin() + k, params.biases.end());
  return out;
}

}  // namespace pcnlab
