#include "pcnlab/engine.hpp"

#include <cstring>
#include <stdexcept>
#include <string>

#include "pcnlab/blas.hpp"
#include "pcnlab/simd_tanh.hpp"

namespace pcnlab {

namespace {

struct LayerPlan {
  bool any_free = false;
  bool all_free = false;
  std::vector<int> free_idx;  // populated only when partially free
};

std::vector<LayerPlan> make_plan(const NetworkTopology& topo, const ClampMask& mask) {
  int L = topo.num_layers();
  if (static_cast<int>(mask.fixed.size()) != L)
    throw ShapeError("settle_samples: mask layer count != topology");
  std::vector<LayerPlan> plan(L);
  for (int n = 0; n < L; ++n) {
    if (static_cast<int>(mask.fixed[n].size()) != topo.size(n))
      throw ShapeError("settle_samples: mask size mismatch at layer " + std::to_string(n));
    int free = 0;
    for (uint8_t f : mask.fixed[n]) free += f ? 0 : 1;
    plan[n].any_free = free > 0;
    plan[n].all_free = free == topo.size(n);
    if (plan[n].any_free && !plan[n].all_free)
      for (int j = 0; j < topo.size(n); ++j)
        if (!mask.fixed[n][j]) plan[n].free_idx.push_back(j);
  }
  return plan;
}

// All state for one lockstep chunk of S samples; every buffer is row-major
// [S x layer_size].
struct ChunkWorkspace {
  int S = 0;
  std::vector<std::vector<double>> mu, pred, err, gated, grad;
  std::vector<double> fe;

  void allocate(const NetworkTopology& topo, int samples, bool with_fe) {
    S = samples;
    int L = topo.num_layers();
    mu.resize(L);
    pred.resize(L);
    err.resize(L);
    gated.resize(L);
    grad.resize(L);
    for (int n = 0; n < L; ++n) {
      size_t sz = static_cast<size_t>(S) * topo.size(n);
      mu[n].resize(sz);
      if (n > 0) {
        pred[n].resize(sz);
        err[n].resize(sz);
        gated[n].resize(sz);
      }
      grad[n].resize(sz);
    }
    if (with_fe) fe.resize(S);
  }
};

void forward_layer(const NetworkParams& params, ChunkWorkspace& ws, int n) {
  int in = params.topology.size(n);
  int out = params.topology.size(n + 1);
  // pre-activation: mu[n] (S x in) * W[n]^T (in x out)
  blas::dgemm(false, true, ws.S, out, in, 1.0, ws.mu[n].data(), in,
              params.weights[n].data.data(), in, 0.0, ws.pred[n + 1].data(), out);
  const double* b = params.biases[n].data();
  for (int i = 0; i < ws.S; ++i) {
    double* row = ws.pred[n + 1].data() + static_cast<size_t>(i) * out;
    tanh_bias_apply(row, row, b, out);
  }
}

void error_layer(ChunkWorkspace& ws, const NetworkTopology& topo, int n) {
  size_t count = static_cast<size_t>(ws.S) * topo.size(n);
  const double* m = ws.mu[n].data();
  const double* p = ws.pred[n].data();
  double* e = ws.err[n].data();
  for (size_t i = 0; i < count; ++i) e[i] = m[i] - p[i];
}

void gate_layer(ChunkWorkspace& ws, const NetworkTopology& topo, const PrecisionConfig& prec,
                int n) {
  size_t count = static_cast<size_t>(ws.S) * topo.size(n);
  double inv = prec.inverse(n);
  const double* e = ws.err[n].data();
  const double* p = ws.pred[n].data();
  double* g = ws.gated[n].data();
  for (size_t i = 0; i < count; ++i) g[i] = inv * e[i] * (1.0 - p[i] * p[i]);
}

void row_free_energy(ChunkWorkspace& ws, const NetworkTopology& topo,
                     const PrecisionConfig& prec) {
  int L = topo.num_layers();
  std::fill(ws.fe.begin(), ws.fe.end(), 0.0);
  for (int n = 1; n < L; ++n) {
    int sz = topo.size(n);
    double half_inv = 0.5 * prec.inverse(n);
    for (int i = 0; i < ws.S; ++i) {
      const double* e = ws.err[n].data() + static_cast<size_t>(i) * sz;
      double q = 0.0;
      for (int j = 0; j < sz; ++j) q += e[j] * e[j];
      ws.fe[i] += half_inv * q;
    }
  }
}

void settle_chunk(const NetworkParams& params, const PrecisionConfig& prec,
                  const std::vector<LayerPlan>& plan, ChunkWorkspace& ws,
                  const SettleOptions& opts, IterationObserver* observer, int first_sample,
                  WeightGradients* chunk_grads, double* chunk_fe_sum) {
  const NetworkTopology& topo = params.topology;
  int L = topo.num_layers();
  BatchStateView view(ws.S, &topo.layer_sizes, &ws.mu,
                      opts.trace_free_energy ? ws.fe.data() : nullptr);

  auto forward_and_errors = [&](bool all_layers) {
    for (int n = 0; n < L - 1; ++n)
      if (all_layers || plan[n].any_free) forward_layer(params, ws, n);
    for (int n = 1; n < L; ++n) error_layer(ws, topo, n);
  };

  for (int it = 0; it < opts.iterations; ++it) {
    forward_and_errors(it == 0);
    if (observer) {
      if (opts.trace_free_energy) row_free_energy(ws, topo, prec);
      observer->observe(it, first_sample, view);
    }
    // gated[n] feeds the bottom-up gradient of layer n-1
    for (int n = 1; n < L; ++n)
      if (plan[n - 1].any_free) gate_layer(ws, topo, prec, n);

    for (int n = 0; n < L; ++n) {
      if (!plan[n].any_free) continue;
      int sz = topo.size(n);
      size_t count = static_cast<size_t>(ws.S) * sz;
      double* g = ws.grad[n].data();
      if (n == L - 1) {
        double inv = prec.inverse(n);
        const double* e = ws.err[n].data();
        for (size_t i = 0; i < count; ++i) g[i] = inv * e[i];
      } else {
        if (n > 0) {
          double inv = prec.inverse(n);
          const double* e = ws.err[n].data();
          for (size_t i = 0; i < count; ++i) g[i] = inv * e[i];
        } else {
          std::memset(g, 0, count * sizeof(double));
        }
        int below = topo.size(n + 1);
        // g -= gated[n+1] (S x below) * W[n] (below x sz)
        blas::dgemm(false, false, ws.S, sz, below, -1.0, ws.gated[n + 1].data(), below,
                    params.weights[n].data.data(), sz, 1.0, g, sz);
      }
      if (plan[n].all_free) {
        double* m = ws.mu[n].data();
        for (size_t i = 0; i < count; ++i) m[i] -= opts.node_lr * g[i];
      } else {
        for (int i = 0; i < ws.S; ++i) {
          double* m = ws.mu[n].data() + static_cast<size_t>(i) * sz;
          const double* gr = g + static_cast<size_t>(i) * sz;
          for (int j : plan[n].free_idx) m[j] -= opts.node_lr * gr[j];
        }
      }
    }
  }

  // leave errors consistent with the final mu
  forward_and_errors(opts.iterations == 0);
  if (observer || chunk_fe_sum) {
    if (opts.trace_free_energy || chunk_fe_sum) row_free_energy(ws, topo, prec);
    if (observer) observer->final_state(first_sample, view);
    if (chunk_fe_sum) {
      double s = 0.0;
      for (int i = 0; i < ws.S; ++i) s += ws.fe[i];
      *chunk_fe_sum = s;
    }
  }

  if (chunk_grads) {
    for (int n = 0; n < L - 1; ++n) {
      gate_layer(ws, topo, prec, n + 1);
      int in = topo.size(n);
      int out = topo.size(n + 1);
      // dF/dW[n] -= gated[n+1]^T (out x S) * mu[n] (S x in), summed over samples
      blas::dgemm(true, false, out, in, ws.S, -1.0, ws.gated[n + 1].data(), out,
                  ws.mu[n].data(), in, 1.0, chunk_grads->dw[n].data.data(), in);
      double* db = chunk_grads->db[n].data();
      for (int i = 0; i < ws.S; ++i) {
        const double* gr = ws.gated[n + 1].data() + static_cast<size_t>(i) * out;
        for (int j = 0; j < out; ++j) db[j] -= gr[j];
      }
    }
  }
}

WeightGradients make_zero_grads(const NetworkParams& params) {
  WeightGradients g;
  int L = params.topology.num_layers();
  g.dw.reserve(L - 1);
  g.db.reserve(L - 1);
  for (int n = 0; n < L - 1; ++n) {
    g.dw.emplace_back(params.topology.size(n + 1), params.topology.size(n));
    g.db.emplace_back(params.topology.size(n + 1), 0.0);
  }
  return g;
}

}  // namespace

void settle_samples(const NetworkParams& params, const PrecisionConfig& prec,
                    const BatchInput& batch, SeededRng& init_rng, const SettleOptions& opts,
                    IterationObserver* observer, WeightGradients* avg_grads,
                    double* mean_final_fe) {
  const NetworkTopology& topo = params.topology;
  int L = topo.num_layers();
  int N = batch.num_samples;
  if (N <= 0) throw std::invalid_argument("settle_samples: empty batch");
  std::vector<LayerPlan> plan = make_plan(topo, batch.mask);
  for (int n = 0; n < L; ++n) {
    bool has_fixed = !plan[n].all_free;
    if (has_fixed && (batch.clamp_rows[n].rows != N || batch.clamp_rows[n].cols != topo.size(n)))
      throw ShapeError("settle_samples: clamp_rows shape mismatch at layer " + std::to_string(n));
  }

  int nchunks = (N + kChunkSamples - 1) / kChunkSamples;
  std::vector<ChunkWorkspace> ws(nchunks);
  for (int c = 0; c < nchunks; ++c) {
    int S = std::min(kChunkSamples, N - c * kChunkSamples);
    ws[c].allocate(topo, S, opts.trace_free_energy || mean_final_fe != nullptr);
  }

  // Free nodes draw from init_rng in (sample, layer, node) order -- the same
  // sequence a sample-by-sample reference run would consume.
  for (int s = 0; s < N; ++s) {
    int c = s / kChunkSamples;
    int r = s % kChunkSamples;
    for (int n = 0; n < L; ++n) {
      int sz = topo.size(n);
      double* row = ws[c].mu[n].data() + static_cast<size_t>(r) * sz;
      const uint8_t* fixed = batch.mask.fixed[n].data();
      if (plan[n].all_free) {
        for (int j = 0; j < sz; ++j) row[j] = init_rng.normal(0.5, 0.05);
      } else {
        const double* clamp = batch.clamp_rows[n].row(s);
        for (int j = 0; j < sz; ++j)
          row[j] = fixed[j] ? clamp[j] : init_rng.normal(0.5, 0.05);
      }
    }
  }

  std::vector<WeightGradients> chunk_grads;
  if (avg_grads) {
    chunk_grads.reserve(nchunks);
    for (int c = 0; c < nchunks; ++c) chunk_grads.push_back(make_zero_grads(params));
  }

  std::vector<double> chunk_fe(mean_final_fe ? nchunks : 0, 0.0);

#pragma omp parallel for schedule(static)
  for (int c = 0; c < nchunks; ++c)
    settle_chunk(params, prec, plan, ws[c], opts, observer, c * kChunkSamples,
                 avg_grads ? &chunk_grads[c] : nullptr,
                 mean_final_fe ? &chunk_fe[c] : nullptr);

  if (mean_final_fe) {
    double total = 0.0;
    for (int c = 0; c < nchunks; ++c) total += chunk_fe[c];
    *mean_final_fe = total / N;
  }

  if (avg_grads) {
    *avg_grads = make_zero_grads(params);
    for (int c = 0; c < nchunks; ++c) {
      for (int n = 0; n < L - 1; ++n) {
        for (size_t i = 0; i < avg_grads->dw[n].size(); ++i)
          avg_grads->dw[n].data[i] += chunk_grads[c].dw[n].data[i];
        for (size_t i = 0; i < avg_grads->db[n].size(); ++i)
          avg_grads->db[n][i] += chunk_grads[c].db[n][i];
      }
    }
    double scale = 1.0 / N;
    for (int n = 0; n < L - 1; ++n) {
      for (double& x : avg_grads->dw[n].data) x *= scale;
      for (double& x : avg_grads->db[n]) x *= scale;
    }
  }
}

AdamStates make_adam_states(const NetworkParams& params) {
  AdamStates s;
  for (size_t n = 0; n < params.weights.size(); ++n) {
    s.weights.emplace_back(params.weights[n].size());
    s.biases.emplace_back(params.biases[n].size());
  }
  return s;
}

double train_batch(NetworkParams& params, AdamStates& adam, const PrecisionConfig& prec,
                   const BatchInput& batch, SeededRng& init_rng, const TrainBatchConfig& cfg) {
  WeightGradients g;
  SettleOptions opts;
  opts.iterations = cfg.iterations;
  opts.node_lr = cfg.node_lr;
  double mean_fe = 0.0;
  settle_samples(params, prec, batch, init_rng, opts, nullptr, &g, &mean_fe);
  for (size_t n = 0; n < params.weights.size(); ++n) {
    adam_step(adam.weights[n], params.weights[n], g.dw[n], cfg.weight_lr);
    adam_step(adam.biases[n], params.biases[n], g.db[n], cfg.weight_lr);
  }
  return mean_fe;
}

}  // namespace pcnlab
