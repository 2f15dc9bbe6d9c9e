#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcnlab/data.hpp"
#include "pcnlab/engine.hpp"
#include "pcnlab/network.hpp"

namespace pcnlab {

// Defaults follow the published training recipe for these tasks: 10 epochs
// over the full 60k training set in batches of 640, node updates by SGD at
// 0.025 for 200 iterations, weight updates by Adam at 1e-4, and test-time
// inference for 200*epoch iterations on 1280 held-out images.
struct ExperimentConfig {
  std::string task = "digit1";
  uint64_t seed = 0;
  int epochs = 10;
  int batch_size = 640;
  double node_lr = 0.025;
  double weight_lr = 1e-4;
  int train_iterations = 200;
  int test_iterations_per_epoch = 200;
  int test_subset = 1280;
  int train_subset = 0;  // 0 = full training set; smaller values for quick runs
  bool noise_top = false;
  std::vector<int> ablation_depths = {0};
  std::vector<uint64_t> seeds = {0, 1, 2, 3, 4, 5};
  int bar_first_row = 13;
  int bar_rows = 2;
  int eval_every = 0;  // evaluate after every k-th epoch during training; 0 = never
  int threads = 0;     // OpenMP worker count; 0 = runtime default. Never affects results.
  std::string out_dir = "runs";
  std::string data_dir;  // empty = $PCNLAB_DATA_DIR, then ./data

  // Canonical key=value echo of the result-affecting fields (excludes paths
  // and thread counts, which must not change results).
  std::string echo() const;
  uint64_t train_hash() const;                 // identifies a training run
  uint64_t eval_hash(int depth, int epoch) const;  // identifies an evaluation

  std::string resolved_data_dir() const;
  TaskSpec task_spec() const;
};

struct Histogram {
  double lo = -0.25;
  double hi = 1.25;
  std::vector<int64_t> counts = std::vector<int64_t>(50, 0);  // out-of-range clips to edge bins

  void add(double v);
  int64_t total() const;
};

struct AblationRow {
  int depth = 0;
  uint64_t seed = 0;
  double label_acc = 0;  // NaN when the label layer was ablated away
  double action_acc = 0;
};

struct DepthStats {
  int depth = 0;
  double mean_action_acc = 0;
  double dispersion = 0;  // stderr for the 4-layer tasks, stddev for the 7-layer task
  std::string dispersion_kind = "stderr";
  int n = 0;
};

struct RunResult {
  int schema_version = 1;
  std::string kind = "evaluation";  // or "sweep"
  std::string task;
  bool noise_top = false;
  uint64_t seed = 0;
  int ablation_depth = 0;
  std::vector<double> label_acc_curve;  // per inference iteration; NaN entries when no label readout
  std::vector<double> action_acc_curve;
  std::vector<double> free_energy_curve;  // mean over test samples
  double final_label_acc = 0;
  double final_action_acc = 0;
  Histogram action_histogram;
  std::vector<AblationRow> ablation;
  std::vector<DepthStats> depth_stats;
  std::string config_echo;
  uint64_t config_hash = 0;
  double wall_clock_seconds = 0;

  bool operator==(const RunResult& other) const;
};

// argmax; ties break to the lowest index
int label_readout(const Vector& top_layer);
// heaviside centred on 0.5; exactly 0.5 reads as 1
int action_readout(double action_value);

RawData load_mnist_split(const std::string& data_dir, bool train);
TaskData prepare_task(const ExperimentConfig& cfg, const RawData& raw_train,
                      const RawData& raw_test);

struct TrainedModel {
  NetworkParams params;
  AdamStates adam;
  int epochs_completed = 0;
};

// Trains per the config, writing one checkpoint per epoch under run_dir and
// resuming from the newest compatible checkpoint found there. Deterministic:
// resuming produces bit-identical results to a straight-through run.
TrainedModel train_model(const ExperimentConfig& cfg, const TaskData& data,
                         const std::string& run_dir, std::ostream* log = nullptr);

// Ablates the top `depth` layers, clamps each test image's pixels, runs
// test-mode inference for test_iterations_per_epoch * epoch iterations with a
// per-iteration trace, and aggregates accuracy/energy curves, final
// readouts, and the action-value histogram.
RunResult evaluate(const NetworkParams& params, const TaskData& data,
                   const ExperimentConfig& cfg, int depth, int epoch);

// evaluate() with a result.json cache under dir.
RunResult evaluate_cached(const NetworkParams& params, const TaskData& data,
                          const ExperimentConfig& cfg, int depth, int epoch,
                          const std::string& dir, std::ostream* log = nullptr);

// Trains one model per seed in cfg.seeds (cached via checkpoints under
// out_dir), evaluates each at every depth in cfg.ablation_depths (cached),
// and aggregates per-depth statistics across seeds.
RunResult ablation_sweep(const ExperimentConfig& cfg, const RawData& raw_train,
                         const RawData& raw_test, std::ostream* log = nullptr);

// Folds per-(seed, depth) evaluation results into one sweep result with
// per-depth mean and dispersion (stderr, or stddev for the 7-layer task).
RunResult aggregate_sweep(const ExperimentConfig& cfg,
                          const std::vector<std::pair<uint64_t, RunResult>>& evals);

struct CurveSummary {
  int label_iters_to_band = -1;  // first iteration from which the curve stays
  int action_iters_to_band = -1;  // within 1 point of its final value
  bool action_ge_label_everywhere = false;
  bool action_gt_label_everywhere = false;
};

CurveSummary curve_metrics(const RunResult& r);

// result.json + curves.csv + ablation.csv
void persist(const RunResult& r, const std::string& dir);
RunResult load_result(const std::string& dir);

std::string run_dir(const ExperimentConfig& cfg, uint64_t seed);

}  // namespace pcnlab
