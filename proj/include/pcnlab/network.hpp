#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pcnlab/numerics.hpp"

namespace pcnlab {

// Layer 0 is the top (deepest) layer, layer L-1 the observation layer at the
// bottom. weights[n] (size[n+1] x size[n]) and biases[n] (size[n+1]) generate
// layer n+1's prediction from layer n.

struct NetworkTopology {
  std::vector<int> layer_sizes;

  NetworkTopology() = default;
  explicit NetworkTopology(std::vector<int> sizes);

  int num_layers() const { return static_cast<int>(layer_sizes.size()); }
  int size(int layer) const { return layer_sizes[layer]; }
  int bottom() const { return num_layers() - 1; }

  bool operator==(const NetworkTopology&) const = default;
};

struct NetworkParams {
  NetworkTopology topology;
  std::vector<Matrix> weights;  // num_layers-1 entries
  std::vector<Vector> biases;   // num_layers-1 entries

  bool operator==(const NetworkParams&) const = default;
};

// Per-layer precisions. Fixed to the identity and never learned here; the
// type exists so the Sigma^-1 factors stay visible where the free energy and
// its gradients are computed.
struct PrecisionConfig {
  std::vector<double> inverse_diag;  // one scale per layer, all 1.0

  PrecisionConfig() = default;
  explicit PrecisionConfig(const NetworkTopology& topo)
      : inverse_diag(topo.num_layers(), 1.0) {}

  double inverse(int layer) const { return inverse_diag[layer]; }
};

// true = node value is externally fixed and never moved by inference
struct ClampMask {
  std::vector<std::vector<uint8_t>> fixed;  // per layer, per node

  static ClampMask none(const NetworkTopology& topo);
  bool any_free(int layer) const;
  bool all_fixed(int layer) const;
};

// Clamp values paired with the mask they belong to. values[n] must be
// layer-sized wherever mask has a fixed bit; unclamped entries are ignored.
struct ClampSpec {
  ClampMask mask;
  std::vector<Vector> values;
};

// Node values and prediction errors for one data sample.
// errors[n] = mu[n] - f(W[n-1] mu[n-1] + b[n-1]) for n >= 1; errors[0] unused.
struct ActivationState {
  std::vector<Vector> mu;
  std::vector<Vector> errors;
};

// Optional per-iteration record from infer().
struct InferTrace {
  std::vector<double> free_energy;          // entry i: state after i node updates
  std::vector<Vector> readout;              // values of the probed nodes, same timing
  int readout_layer = -1;
};

NetworkParams init_network(const NetworkTopology& topo, SeededRng& rng);

ActivationState init_state(const NetworkTopology& topo, const ClampSpec& clamps,
                           SeededRng& rng);

// f(W[n] mu[n] + b[n]), the predicted mean of layer n+1; 0 <= n <= L-2
Vector predict_layer(const NetworkParams& params, const ActivationState& state, int n);

void compute_errors(ActivationState& state, const NetworkParams& params);

// sum over layers of 0.5 * eps^T Sigma^-1 eps, constant term dropped.
// Requires errors computed for the current mu.
double free_energy(const ActivationState& state, const NetworkParams& params,
                   const PrecisionConfig& prec);

// dF/dmu per layer. Hidden layers combine the bottom-up term
// -W^T (Sigma^-1 eps_below * f') with the top-down term Sigma^-1 eps; the top
// layer has no top-down term; free observation nodes see only their own
// error. Clamped nodes get exactly zero. Requires errors computed.
std::vector<Vector> node_gradients(const ActivationState& state, const NetworkParams& params,
                                   const ClampMask& mask, const PrecisionConfig& prec);

// `iterations` rounds of {compute_errors; node_gradients; SGD step on mu}.
// Returns with errors freshly computed for the final mu. Clamped nodes are
// never touched. Trace entry i reflects the state after i updates.
void infer(ActivationState& state, const NetworkParams& params, const ClampMask& mask,
           const PrecisionConfig& prec, int iterations, double node_lr,
           InferTrace* trace = nullptr);

struct WeightGradients {
  std::vector<Matrix> dw;
  std::vector<Vector> db;
};

// dF/dW and dF/db. Requires errors computed (state settled by infer).
WeightGradients weight_gradients(const ActivationState& state, const NetworkParams& params,
                                 const PrecisionConfig& prec);

// Drops the top k layers; the remaining network keeps its weights and its new
// top layer becomes a free layer with the truncated update rule. 0 <= k <= L-2.
NetworkParams ablate(const NetworkParams& params, int k);

}  // namespace pcnlab
