#include "pcnlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "pcnlab/checkpoint.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace pcnlab {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double json_double(const ordered_json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

// ---------------------------------------------------------------------------
// config
// ---------------------------------------------------------------------------

std::string ExperimentConfig::echo() const {
  std::ostringstream s;
  s << "task=" << task << "\n"
    << "noise_top=" << (noise_top ? 1 : 0) << "\n"
    << "seed=" << seed << "\n"
    << "epochs=" << epochs << "\n"
    << "batch_size=" << batch_size << "\n"
    << "node_lr=" << fmt_double(node_lr) << "\n"
    << "weight_lr=" << fmt_double(weight_lr) << "\n"
    << "train_iterations=" << train_iterations << "\n"
    << "test_iterations_per_epoch=" << test_iterations_per_epoch << "\n"
    << "test_subset=" << test_subset << "\n"
    << "train_subset=" << train_subset << "\n"
    << "bar_first_row=" << bar_first_row << "\n"
    << "bar_rows=" << bar_rows << "\n";
  return s.str();
}

uint64_t ExperimentConfig::train_hash() const {
  // training-relevant fields only: evaluation knobs (test subset size, test
  // iteration rule) must not invalidate checkpoints
  std::ostringstream s;
  s << "task=" << task << "\n"
    << "noise_top=" << (noise_top ? 1 : 0) << "\n"
    << "seed=" << seed << "\n"
    << "epochs=" << epochs << "\n"
    << "batch_size=" << batch_size << "\n"
    << "node_lr=" << fmt_double(node_lr) << "\n"
    << "weight_lr=" << fmt_double(weight_lr) << "\n"
    << "train_iterations=" << train_iterations << "\n"
    << "train_subset=" << train_subset << "\n"
    << "bar_first_row=" << bar_first_row << "\n"
    << "bar_rows=" << bar_rows << "\n";
  return detail::fnv1a64(s.str());
}

uint64_t ExperimentConfig::eval_hash(int depth, int epoch) const {
  return detail::fnv1a64(echo() + "depth=" + std::to_string(depth) +
                         "\neval_epoch=" + std::to_string(epoch) + "\n");
}

std::string ExperimentConfig::resolved_data_dir() const {
  if (!data_dir.empty()) return data_dir;
  if (const char* env = std::getenv("PCNLAB_DATA_DIR")) return env;
  return "data";
}

TaskSpec ExperimentConfig::task_spec() const {
  TaskSpec spec = TaskSpec::make(parse_task(task));
  spec.noise_top = noise_top;
  spec.bar_first_row = bar_first_row;
  spec.bar_rows = bar_rows;
  return spec;
}

// ---------------------------------------------------------------------------
// readouts, histogram
// ---------------------------------------------------------------------------

int label_readout(const Vector& top_layer) {
  if (top_layer.empty()) throw std::invalid_argument("label_readout: empty vector");
  int best = 0;
  for (size_t i = 1; i < top_layer.size(); ++i)
    if (top_layer[i] > top_layer[best]) best = static_cast<int>(i);
  return best;
}

int action_readout(double action_value) {
  if (std::isnan(action_value)) throw std::invalid_argument("action_readout: NaN action value");
  return action_value >= 0.5 ? 1 : 0;
}

void Histogram::add(double v) {
  int nbins = static_cast<int>(counts.size());
  int bin = static_cast<int>(std::floor((v - lo) / (hi - lo) * nbins));
  bin = std::clamp(bin, 0, nbins - 1);
  counts[bin] += 1;
}

int64_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), int64_t{0}); }

// ---------------------------------------------------------------------------
// data plumbing
// ---------------------------------------------------------------------------

RawData load_mnist_split(const std::string& data_dir, bool train) {
  std::string prefix = train ? "train" : "t10k";
  fs::path images = fs::path(data_dir) / (prefix + "-images-idx3-ubyte");
  fs::path labels = fs::path(data_dir) / (prefix + "-labels-idx1-ubyte");
  if (!fs::exists(images) || !fs::exists(labels))
    throw ParseError("MNIST files not found under '" + data_dir +
                     "' (expected " + prefix + "-images-idx3-ubyte and " + prefix +
                     "-labels-idx1-ubyte; set PCNLAB_DATA_DIR or --data-dir)");
  return load_idx(images.string(), labels.string());
}

TaskData prepare_task(const ExperimentConfig& cfg, const RawData& raw_train,
                      const RawData& raw_test) {
  SeededRng rng = SeededRng(cfg.seed).derive("data");
  TaskData data = build_task(cfg.task_spec(), raw_train, raw_test, rng, cfg.test_subset);
  if (cfg.train_subset > 0 && cfg.train_subset < data.train.count) {
    data.train.count = cfg.train_subset;
    data.train.pixels.resize(static_cast<size_t>(cfg.train_subset) * kImagePixels);
    data.train.labels.resize(cfg.train_subset);
    data.train.actions.resize(cfg.train_subset);
  }
  return data;
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

namespace {

// Accumulates per-iteration readout correctness and free energy. observe()
// runs concurrently for different chunks, so all counters are chunk-indexed
// and merged in chunk order afterwards.
class CurveAccumulator : public IterationObserver {
 public:
  CurveAccumulator(const TaskSpec& spec, int depth, const Dataset& test, int iterations)
      : spec_(spec),
        test_(test),
        iters_(iterations),
        n_(test.count),
        nchunks_((test.count + kChunkSamples - 1) / kChunkSamples),
        label_valid_(depth == 0 && spec.label_at_top()),
        onehot_(spec.id == TaskId::onehot_bottom) {
    label_ok_.assign(nchunks_, std::vector<int>(iters_, 0));
    action_ok_.assign(nchunks_, std::vector<int>(iters_, 0));
    fe_sum_.assign(nchunks_, std::vector<double>(iters_, 0.0));
    final_label_ok_.assign(nchunks_, 0);
    final_action_ok_.assign(nchunks_, 0);
    final_action_value_.assign(n_, 0.0);
  }

  void observe(int iteration, int first, const BatchStateView& view) override {
    int c = first / kChunkSamples;
    auto [lab, act] = count_correct(first, view);
    label_ok_[c][iteration] = lab;
    action_ok_[c][iteration] = act;
    const double* fe = view.free_energy();
    double s = 0.0;
    for (int i = 0; i < view.num_samples(); ++i) s += fe[i];
    fe_sum_[c][iteration] = s;
  }

  void final_state(int first, const BatchStateView& view) override {
    int c = first / kChunkSamples;
    auto [lab, act] = count_correct(first, view);
    final_label_ok_[c] = lab;
    final_action_ok_[c] = act;
    int bottom = view.num_layers() - 1;
    int sz = view.layer_size(bottom);
    for (int i = 0; i < view.num_samples(); ++i) {
      const double* row = view.mu(bottom) + static_cast<size_t>(i) * sz;
      int s = first + i;
      int node = spec_.action_begin() + (onehot_ ? test_.actions[s] : 0);
      final_action_value_[s] = row[node];
    }
  }

  void fill(RunResult& r) const {
    double nan = std::numeric_limits<double>::quiet_NaN();
    r.label_acc_curve.resize(iters_);
    r.action_acc_curve.resize(iters_);
    r.free_energy_curve.resize(iters_);
    for (int it = 0; it < iters_; ++it) {
      int64_t lab = 0, act = 0;
      double fe = 0.0;
      for (int c = 0; c < nchunks_; ++c) {
        lab += label_ok_[c][it];
        act += action_ok_[c][it];
        fe += fe_sum_[c][it];
      }
      r.action_acc_curve[it] = static_cast<double>(act) / n_;
      r.label_acc_curve[it] = label_valid_ || onehot_ ? static_cast<double>(lab) / n_ : nan;
      r.free_energy_curve[it] = fe / n_;
    }
    int64_t lab = std::accumulate(final_label_ok_.begin(), final_label_ok_.end(), int64_t{0});
    int64_t act = std::accumulate(final_action_ok_.begin(), final_action_ok_.end(), int64_t{0});
    r.final_action_acc = static_cast<double>(act) / n_;
    r.final_label_acc = label_valid_ || onehot_ ? static_cast<double>(lab) / n_ : nan;
    for (double v : final_action_value_) r.action_histogram.add(v);
  }

 private:
  std::pair<int, int> count_correct(int first, const BatchStateView& view) const {
    int lab = 0, act = 0;
    int bottom = view.num_layers() - 1;
    int bsz = view.layer_size(bottom);
    int tsz = view.layer_size(0);
    for (int i = 0; i < view.num_samples(); ++i) {
      int s = first + i;
      const double* brow = view.mu(bottom) + static_cast<size_t>(i) * bsz;
      if (onehot_) {
        const double* group = brow + spec_.action_begin();
        int best = 0;
        for (int k = 1; k < spec_.action_count(); ++k)
          if (group[k] > group[best]) best = k;
        if (best == test_.actions[s]) ++act;
        lab = act;  // the one-hot group is both the action and the label readout
      } else {
        if (action_readout(brow[spec_.action_begin()]) == test_.actions[s]) ++act;
        if (label_valid_) {
          const double* trow = view.mu(0) + static_cast<size_t>(i) * tsz;
          int best = 0;
          for (int k = 1; k < tsz; ++k)
            if (trow[k] > trow[best]) best = k;
          if (best == test_.labels[s]) ++lab;
        }
      }
    }
    return {lab, act};
  }

  const TaskSpec spec_;
  const Dataset& test_;
  int iters_, n_, nchunks_;
  bool label_valid_, onehot_;
  std::vector<std::vector<int>> label_ok_, action_ok_;
  std::vector<std::vector<double>> fe_sum_;
  std::vector<int> final_label_ok_, final_action_ok_;
  std::vector<double> final_action_value_;
};

std::string ckpt_path(const std::string& run_dir, int epoch) {
  return run_dir + "/ckpt_epoch" + std::to_string(epoch) + ".bin";
}

}  // namespace

RunResult evaluate(const NetworkParams& params, const TaskData& data,
                   const ExperimentConfig& cfg, int depth, int epoch) {
  auto t0 = std::chrono::steady_clock::now();
  NetworkParams net = ablate(params, depth);
  TaskSpec abl_spec = data.spec;
  abl_spec.topology = net.topology;

  // test-time inference runs 200*epoch iterations; an untrained network
  // (epoch 0) is still probed with one epoch's worth
  int iters = cfg.test_iterations_per_epoch * std::max(1, epoch);

  std::vector<int> all(data.test.count);
  std::iota(all.begin(), all.end(), 0);
  BatchInput batch = pack_batch(data.test, all, abl_spec, Mode::test);

  CurveAccumulator acc(abl_spec, depth, data.test, iters);
  SeededRng init_rng = SeededRng(cfg.seed).derive("eval-init", depth, epoch);
  PrecisionConfig prec(net.topology);
  SettleOptions opts;
  opts.iterations = iters;
  opts.node_lr = cfg.node_lr;
  opts.trace_free_energy = true;
  settle_samples(net, prec, batch, init_rng, opts, &acc, nullptr);

  RunResult r;
  r.kind = "evaluation";
  r.task = cfg.task;
  r.noise_top = cfg.noise_top;
  r.seed = cfg.seed;
  r.ablation_depth = depth;
  acc.fill(r);
  r.config_echo = cfg.echo();
  r.config_hash = cfg.eval_hash(depth, epoch);
  r.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

RunResult evaluate_cached(const NetworkParams& params, const TaskData& data,
                          const ExperimentConfig& cfg, int depth, int epoch,
                          const std::string& dir, std::ostream* log) {
  uint64_t want = cfg.eval_hash(depth, epoch);
  if (fs::exists(fs::path(dir) / "result.json")) {
    try {
      RunResult r = load_result(dir);
      if (r.config_hash == want) {
        if (log) *log << "  eval depth " << depth << ": cached (" << dir << ")\n";
        return r;
      }
    } catch (const std::exception&) {
      // stale or unreadable cache entry; recompute
    }
  }
  RunResult r = evaluate(params, data, cfg, depth, epoch);
  persist(r, dir);
  if (log)
    *log << "  eval depth " << depth << ": action_acc=" << r.final_action_acc
         << " label_acc=" << r.final_label_acc << " (" << r.wall_clock_seconds << "s)\n";
  return r;
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

std::string run_dir(const ExperimentConfig& cfg, uint64_t seed) {
  return cfg.out_dir + "/" + cfg.task + (cfg.noise_top ? "-noise" : "") + "/seed" +
         std::to_string(seed);
}

TrainedModel train_model(const ExperimentConfig& cfg, const TaskData& data,
                         const std::string& run_dir, std::ostream* log) {
  fs::create_directories(run_dir);
  uint64_t hash = cfg.train_hash();
  SeededRng root(cfg.seed);

  TrainedModel model;
  int start_epoch = 0;
  for (int e = cfg.epochs; e >= 1 && start_epoch == 0; --e) {
    std::string path = ckpt_path(run_dir, e);
    if (!fs::exists(path)) continue;
    try {
      Checkpoint ck = load_checkpoint(path);
      if (ck.config_hash == hash && ck.task == cfg.task && ck.epoch == e) {
        model.params = std::move(ck.params);
        model.adam = std::move(ck.adam);
        start_epoch = e;
        if (log) *log << "resuming from " << path << "\n";
      }
    } catch (const CheckpointError&) {
      // unusable checkpoint; keep looking at earlier epochs
    }
  }
  if (start_epoch == 0) {
    SeededRng prng = root.derive("params");
    model.params = init_network(data.spec.topology, prng);
    model.adam = make_adam_states(model.params);
  }

  PrecisionConfig prec(data.spec.topology);
  TrainBatchConfig tb;
  tb.iterations = cfg.train_iterations;
  tb.node_lr = cfg.node_lr;
  tb.weight_lr = cfg.weight_lr;

  for (int e = start_epoch + 1; e <= cfg.epochs; ++e) {
    auto t0 = std::chrono::steady_clock::now();
    SeededRng shuffle_rng = root.derive("shuffle", e);
    auto idx = batches(data.train.count, cfg.batch_size, shuffle_rng);
    double fe_last = 0.0;
    for (size_t b = 0; b < idx.size(); ++b) {
      SeededRng state_rng = root.derive("estate", e, b);
      SeededRng noise_rng = root.derive("noise", e, b);
      BatchInput batch = pack_batch(data.train, idx[b], data.spec, Mode::train,
                                    data.spec.noise_top ? &noise_rng : nullptr);
      fe_last = train_batch(model.params, model.adam, prec, batch, state_rng, tb);
    }
    Checkpoint ck;
    ck.task = cfg.task;
    ck.noise_top = cfg.noise_top;
    ck.seed = cfg.seed;
    ck.epoch = e;
    ck.config_hash = hash;
    ck.params = model.params;
    ck.adam = model.adam;
    save_checkpoint(ck, ckpt_path(run_dir, e));
    if (log) {
      double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      *log << "epoch " << e << "/" << cfg.epochs << ": " << idx.size()
           << " batches, last batch mean F=" << fe_last << " (" << static_cast<int>(dt)
           << "s)\n";
      log->flush();
    }
    if (cfg.eval_every > 0 && e % cfg.eval_every == 0 && e < cfg.epochs) {
      evaluate_cached(model.params, data, cfg, 0, e,
                      run_dir + "/eval_e" + std::to_string(e) + "_d0", log);
    }
  }
  model.epochs_completed = cfg.epochs;
  return model;
}

// ---------------------------------------------------------------------------
// sweeps
// ---------------------------------------------------------------------------

RunResult aggregate_sweep(const ExperimentConfig& cfg,
                          const std::vector<std::pair<uint64_t, RunResult>>& evals) {
  if (evals.empty()) throw std::invalid_argument("aggregate_sweep: no evaluations");
  RunResult sweep;
  sweep.kind = "sweep";
  sweep.task = cfg.task;
  sweep.noise_top = cfg.noise_top;
  sweep.seed = evals.front().first;

  const RunResult& first = evals.front().second;
  sweep.label_acc_curve = first.label_acc_curve;
  sweep.action_acc_curve = first.action_acc_curve;
  sweep.free_energy_curve = first.free_energy_curve;
  sweep.final_label_acc = first.final_label_acc;
  sweep.final_action_acc = first.final_action_acc;
  sweep.action_histogram = first.action_histogram;
  sweep.ablation_depth = first.ablation_depth;

  std::vector<int> depths;
  for (const auto& [sd, r] : evals) {
    sweep.ablation.push_back({r.ablation_depth, sd, r.final_label_acc, r.final_action_acc});
    if (std::find(depths.begin(), depths.end(), r.ablation_depth) == depths.end())
      depths.push_back(r.ablation_depth);
  }
  std::sort(depths.begin(), depths.end());

  // 7-layer runs report standard deviation, the 4-layer tasks standard error
  bool use_stddev = cfg.task_spec().id == TaskId::onehot_bottom;
  for (int d : depths) {
    std::vector<double> accs;
    for (const AblationRow& row : sweep.ablation)
      if (row.depth == d) accs.push_back(row.action_acc);
    DepthStats st;
    st.depth = d;
    st.n = static_cast<int>(accs.size());
    double mean = std::accumulate(accs.begin(), accs.end(), 0.0) / st.n;
    st.mean_action_acc = mean;
    double var = 0.0;
    for (double a : accs) var += (a - mean) * (a - mean);
    double sd = st.n > 1 ? std::sqrt(var / (st.n - 1)) : 0.0;
    st.dispersion = use_stddev ? sd : sd / std::sqrt(static_cast<double>(st.n));
    st.dispersion_kind = use_stddev ? "stddev" : "stderr";
    sweep.depth_stats.push_back(st);
  }

  sweep.config_echo = cfg.echo();
  sweep.config_hash = cfg.train_hash();
  return sweep;
}

RunResult ablation_sweep(const ExperimentConfig& cfg, const RawData& raw_train,
                         const RawData& raw_test, std::ostream* log) {
  if (cfg.seeds.empty()) throw std::invalid_argument("ablation_sweep: empty seed list");
  auto t0 = std::chrono::steady_clock::now();

  std::vector<std::pair<uint64_t, RunResult>> evals;
  for (uint64_t sd : cfg.seeds) {
    ExperimentConfig c = cfg;
    c.seed = sd;
    if (log) *log << "[" << cfg.task << (cfg.noise_top ? "-noise" : "") << " seed " << sd
                  << "]\n";
    TaskData data = prepare_task(c, raw_train, raw_test);
    std::string rd = run_dir(c, sd);
    TrainedModel model = train_model(c, data, rd, log);
    for (int d : cfg.ablation_depths)
      evals.emplace_back(sd, evaluate_cached(model.params, data, c, d, c.epochs,
                                             rd + "/eval_d" + std::to_string(d), log));
  }

  RunResult sweep = aggregate_sweep(cfg, evals);
  sweep.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sweep;
}

// ---------------------------------------------------------------------------
// curve metrics
// ---------------------------------------------------------------------------

namespace {

int iters_to_band(const std::vector<double>& curve) {
  if (curve.empty()) return -1;
  double final = curve.back();
  if (std::isnan(final)) return -1;
  int i = 0;
  for (int j = static_cast<int>(curve.size()) - 1; j >= 0; --j) {
    if (std::fabs(curve[j] - final) > 0.01 + 1e-12) {
      i = j + 1;
      break;
    }
  }
  return i;
}

}  // namespace

CurveSummary curve_metrics(const RunResult& r) {
  CurveSummary s;
  s.label_iters_to_band = iters_to_band(r.label_acc_curve);
  s.action_iters_to_band = iters_to_band(r.action_acc_curve);
  if (!r.action_acc_curve.empty() && r.action_acc_curve.size() == r.label_acc_curve.size()) {
    s.action_ge_label_everywhere = true;
    s.action_gt_label_everywhere = true;
    for (size_t i = 0; i < r.action_acc_curve.size(); ++i) {
      double a = r.action_acc_curve[i], l = r.label_acc_curve[i];
      if (std::isnan(l)) {
        s.action_ge_label_everywhere = s.action_gt_label_everywhere = false;
        break;
      }
      if (!(a >= l)) s.action_ge_label_everywhere = false;
      if (!(a > l)) s.action_gt_label_everywhere = false;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// persistence
// ---------------------------------------------------------------------------

namespace {

ordered_json result_to_json(const RunResult& r) {
  auto num_or_null = [](double v) {
    return std::isnan(v) ? ordered_json(nullptr) : ordered_json(v);
  };
  auto curve = [&](const std::vector<double>& c) {
    ordered_json a = ordered_json::array();
    for (double v : c) a.push_back(num_or_null(v));
    return a;
  };
  ordered_json j;
  j["schema_version"] = r.schema_version;
  j["kind"] = r.kind;
  j["task"] = r.task;
  j["noise_top"] = r.noise_top;
  j["seed"] = r.seed;
  j["ablation_depth"] = r.ablation_depth;
  char hash[32];
  std::snprintf(hash, sizeof(hash), "0x%016llx", static_cast<unsigned long long>(r.config_hash));
  j["config_hash"] = hash;
  j["config"] = r.config_echo;
  j["curves"] = ordered_json{{"label_acc", curve(r.label_acc_curve)},
                             {"action_acc", curve(r.action_acc_curve)},
                             {"mean_free_energy", curve(r.free_energy_curve)}};
  j["final"] = ordered_json{{"label_acc", num_or_null(r.final_label_acc)},
                            {"action_acc", num_or_null(r.final_action_acc)}};
  j["action_histogram"] = ordered_json{
      {"lo", r.action_histogram.lo}, {"hi", r.action_histogram.hi}, {"counts", r.action_histogram.counts}};
  ordered_json rows = ordered_json::array();
  for (const AblationRow& row : r.ablation)
    rows.push_back(ordered_json{{"depth", row.depth},
                                {"seed", row.seed},
                                {"label_acc", num_or_null(row.label_acc)},
                                {"action_acc", num_or_null(row.action_acc)}});
  j["ablation"] = rows;
  ordered_json stats = ordered_json::array();
  for (const DepthStats& st : r.depth_stats)
    stats.push_back(ordered_json{{"depth", st.depth},
                                 {"mean_action_acc", st.mean_action_acc},
                                 {"dispersion", st.dispersion},
                                 {"dispersion_kind", st.dispersion_kind},
                                 {"n", st.n}});
  j["depth_stats"] = stats;
  j["wall_clock_seconds"] = r.wall_clock_seconds;
  return j;
}

RunResult result_from_json(const ordered_json& j) {
  if (!j.contains("schema_version"))
    throw std::runtime_error("result.json: missing schema_version field");
  if (j["schema_version"].get<int>() != 1)
    throw std::runtime_error("result.json: unsupported schema_version " +
                             j["schema_version"].dump());
  RunResult r;
  r.kind = j["kind"].get<std::string>();
  r.task = j["task"].get<std::string>();
  r.noise_top = j["noise_top"].get<bool>();
  r.seed = j["seed"].get<uint64_t>();
  r.ablation_depth = j["ablation_depth"].get<int>();
  r.config_hash = std::stoull(j["config_hash"].get<std::string>(), nullptr, 16);
  r.config_echo = j["config"].get<std::string>();
  for (const auto& v : j["curves"]["label_acc"]) r.label_acc_curve.push_back(json_double(v));
  for (const auto& v : j["curves"]["action_acc"]) r.action_acc_curve.push_back(json_double(v));
  for (const auto& v : j["curves"]["mean_free_energy"])
    r.free_energy_curve.push_back(json_double(v));
  r.final_label_acc = json_double(j["final"]["label_acc"]);
  r.final_action_acc = json_double(j["final"]["action_acc"]);
  r.action_histogram.lo = j["action_histogram"]["lo"].get<double>();
  r.action_histogram.hi = j["action_histogram"]["hi"].get<double>();
  r.action_histogram.counts = j["action_histogram"]["counts"].get<std::vector<int64_t>>();
  for (const auto& row : j["ablation"])
    r.ablation.push_back({row["depth"].get<int>(), row["seed"].get<uint64_t>(),
                          json_double(row["label_acc"]), json_double(row["action_acc"])});
  for (const auto& st : j["depth_stats"]) {
    DepthStats d;
    d.depth = st["depth"].get<int>();
    d.mean_action_acc = st["mean_action_acc"].get<double>();
    d.dispersion = st["dispersion"].get<double>();
    d.dispersion_kind = st["dispersion_kind"].get<std::string>();
    d.n = st["n"].get<int>();
    r.depth_stats.push_back(d);
  }
  r.wall_clock_seconds = j["wall_clock_seconds"].get<double>();
  return r;
}

}  // namespace

bool RunResult::operator==(const RunResult& other) const {
  return result_to_json(*this) == result_to_json(other);
}

void persist(const RunResult& r, const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream f(fs::path(dir) / "curves.csv", std::ios::trunc);
    f << "iteration,label_acc,action_acc,mean_free_energy\n";
    for (size_t i = 0; i < r.action_acc_curve.size(); ++i)
      f << i << "," << fmt_double(r.label_acc_curve[i]) << ","
        << fmt_double(r.action_acc_curve[i]) << "," << fmt_double(r.free_energy_curve[i])
        << "\n";
  }
  {
    std::ofstream f(fs::path(dir) / "ablation.csv", std::ios::trunc);
    f << "depth,seed,label_acc,action_acc\n";
    for (const AblationRow& row : r.ablation)
      f << row.depth << "," << row.seed << "," << fmt_double(row.label_acc) << ","
        << fmt_double(row.action_acc) << "\n";
  }
  {
    std::ofstream f(fs::path(dir) / "result.json", std::ios::trunc);
    f << result_to_json(r).dump(2) << "\n";
  }
}

RunResult load_result(const std::string& dir) {
  std::ifstream f(fs::path(dir) / "result.json");
  if (!f) throw std::runtime_error(dir + "/result.json: cannot open");
  ordered_json j = ordered_json::parse(f);
  return result_from_json(j);
}

}  // namespace pcnlab
