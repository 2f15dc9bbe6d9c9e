#pragma once

#include <vector>

#include "pcnlab/network.hpp"
#include "pcnlab/numerics.hpp"

namespace pcnlab {

// Samples are settled in lockstep chunks of this many states, with OpenMP
// across chunks. The chunk size is a fixed constant, and chunk results are
// reduced in chunk order, so outputs never depend on the thread count.
inline constexpr int kChunkSamples = 640;

// Read access to one chunk of states during/after settling.
class BatchStateView {
 public:
  BatchStateView(int num_samples, const std::vector<int>* sizes,
                 const std::vector<std::vector<double>>* mu, const double* fe)
      : num_samples_(num_samples), sizes_(sizes), mu_(mu), fe_(fe) {}

  int num_samples() const { return num_samples_; }
  int num_layers() const { return static_cast<int>(sizes_->size()); }
  int layer_size(int n) const { return (*sizes_)[n]; }
  // row-major [num_samples x layer_size]
  const double* mu(int n) const { return (*mu_)[n].data(); }
  // per-sample free energy; only valid when the run traces it
  const double* free_energy() const { return fe_; }

 private:
  int num_samples_;
  const std::vector<int>* sizes_;
  const std::vector<std::vector<double>>* mu_;
  const double* fe_;
};

// Per-iteration hook. Called once per chunk per iteration, possibly
// concurrently for different chunks; implementations write into
// chunk-indexed slots (first_sample / kChunkSamples) to stay deterministic.
class IterationObserver {
 public:
  virtual ~IterationObserver() = default;
  // `iteration` = number of node updates already applied (0 = initial state)
  virtual void observe(int iteration, int first_sample, const BatchStateView& view) = 0;
  // state after all updates, errors freshly recomputed
  virtual void final_state(int first_sample, const BatchStateView& view) = 0;
};

// One batch of samples sharing a clamp mask. clamp_rows[n] is a row-major
// [num_samples x size(n)] matrix of clamp values; only entries whose mask bit
// is set are read, and layers with no fixed bits may leave it empty.
struct BatchInput {
  ClampMask mask;
  std::vector<Matrix> clamp_rows;
  int num_samples = 0;
};

struct SettleOptions {
  int iterations = 0;
  double node_lr = 0.025;
  bool trace_free_energy = false;
};

// Initializes one state per sample (free nodes drawn N(0.5, 0.05) from
// init_rng in sample order, clamped nodes from clamp_rows) and settles them
// all. When avg_grads is given, also accumulates dF/dW and dF/db at the
// settled states, averaged over samples. mean_final_fe, when given, receives
// the batch-mean free energy of the settled states.
void settle_samples(const NetworkParams& params, const PrecisionConfig& prec,
                    const BatchInput& batch, SeededRng& init_rng, const SettleOptions& opts,
                    IterationObserver* observer, WeightGradients* avg_grads,
                    double* mean_final_fe = nullptr);

struct AdamStates {
  std::vector<AdamState> weights;
  std::vector<AdamState> biases;
};

AdamStates make_adam_states(const NetworkParams& params);

struct TrainBatchConfig {
  int iterations = 200;
  double node_lr = 0.025;
  double weight_lr = 1e-4;
};

// One EM step: settle every sample with train-mode clamps, average the weight
// gradients over the batch, apply one Adam step. Returns the batch-mean free
// energy of the settled states (before the weight step).
double train_batch(NetworkParams& params, AdamStates& adam, const PrecisionConfig& prec,
                   const BatchInput& batch, SeededRng& init_rng, const TrainBatchConfig& cfg);

}  // namespace pcnlab
