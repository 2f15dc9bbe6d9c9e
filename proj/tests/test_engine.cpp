#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include <cmath>

#include "pcnlab/engine.hpp"
#include "pcnlab/verify.hpp"

using namespace pcnlab;

namespace {

// Snapshots every iteration's free energy and the final node values.
struct Collector : IterationObserver {
  int iterations;
  int num_samples;
  std::vector<std::vector<double>> fe;        // [iter][sample]
  std::vector<std::vector<double>> final_mu;  // [layer][sample * size]

  Collector(int iters, int n, const NetworkTopology& topo)
      : iterations(iters), num_samples(n), fe(iters, std::vector<double>(n, 0.0)) {
    final_mu.resize(topo.num_layers());
    for (int l = 0; l < topo.num_layers(); ++l)
      final_mu[l].resize(static_cast<size_t>(n) * topo.size(l));
  }

  void observe(int it, int first, const BatchStateView& view) override {
    for (int i = 0; i < view.num_samples(); ++i) fe[it][first + i] = view.free_energy()[i];
  }

  void final_state(int first, const BatchStateView& view) override {
    for (int l = 0; l < view.num_layers(); ++l) {
      int sz = view.layer_size(l);
      for (int i = 0; i < view.num_samples(); ++i)
        for (int j = 0; j < sz; ++j)
          final_mu[l][static_cast<size_t>(first + i) * sz + j] =
              view.mu(l)[static_cast<size_t>(i) * sz + j];
    }
  }
};

struct ToySetup {
  NetworkTopology topo;
  NetworkParams params;
  PrecisionConfig prec;
  BatchInput batch;
};

// Random network plus a batch whose clamp pattern mirrors the real tasks:
// bottom layer mostly clamped with a couple of free nodes, top layer
// optionally clamped.
ToySetup make_setup(uint64_t seed, int num_samples, bool clamp_top) {
  SeededRng rng(seed);
  ToySetup t;
  t.topo = NetworkTopology({4, 6, 9});
  t.params = init_network(t.topo, rng);
  t.prec = PrecisionConfig(t.topo);
  t.batch.mask = ClampMask::none(t.topo);
  t.batch.num_samples = num_samples;
  int L = t.topo.num_layers();
  for (int j = 0; j < t.topo.size(L - 1) - 2; ++j) t.batch.mask.fixed[L - 1][j] = 1;
  if (clamp_top)
    for (auto& f : t.batch.mask.fixed[0]) f = 1;
  t.batch.clamp_rows.resize(L);
  for (int n = 0; n < L; ++n) {
    if (!t.batch.mask.all_fixed(n) && !t.batch.mask.any_free(n)) continue;
    bool has_fixed = false;
    for (auto f : t.batch.mask.fixed[n]) has_fixed |= f != 0;
    if (!has_fixed) continue;
    t.batch.clamp_rows[n] = Matrix(num_samples, t.topo.size(n));
    for (double& v : t.batch.clamp_rows[n].data) v = rng.normal(0.4, 0.3);
  }
  return t;
}

}  // namespace

TEST_CASE("engine matches the per-sample reference implementation") {
  const int N = kChunkSamples * 2 + kChunkSamples / 2;  // spans three chunks
  const int iters = 40;
  ToySetup t = make_setup(555, N, true);

  Collector col(iters, N, t.topo);
  SettleOptions opts;
  opts.iterations = iters;
  opts.node_lr = 0.02;
  opts.trace_free_energy = true;
  SeededRng engine_rng(777);
  WeightGradients engine_grads;
  settle_samples(t.params, t.prec, t.batch, engine_rng, opts, &col, &engine_grads);

  // reference: one sample at a time, consuming the same init stream
  SeededRng ref_rng(777);
  WeightGradients ref_sum;
  for (int n = 0; n < t.topo.num_layers() - 1; ++n) {
    ref_sum.dw.emplace_back(t.topo.size(n + 1), t.topo.size(n));
    ref_sum.db.emplace_back(t.topo.size(n + 1), 0.0);
  }
  double max_mu_diff = 0.0, max_fe_diff = 0.0;
  for (int s = 0; s < N; ++s) {
    ClampSpec c;
    c.mask = t.batch.mask;
    c.values.resize(t.topo.num_layers());
    for (int n = 0; n < t.topo.num_layers(); ++n) {
      c.values[n].assign(t.topo.size(n), 0.0);
      if (t.batch.clamp_rows[n].rows > 0)
        c.values[n].assign(t.batch.clamp_rows[n].row(s),
                           t.batch.clamp_rows[n].row(s) + t.topo.size(n));
    }
    ActivationState st = init_state(t.topo, c, ref_rng);
    InferTrace trace;
    infer(st, t.params, c.mask, t.prec, iters, opts.node_lr, &trace);
    for (int it = 0; it < iters; ++it)
      max_fe_diff = std::max(max_fe_diff, std::fabs(trace.free_energy[it] - col.fe[it][s]));
    for (int l = 0; l < t.topo.num_layers(); ++l) {
      int sz = t.topo.size(l);
      for (int j = 0; j < sz; ++j)
        max_mu_diff = std::max(
            max_mu_diff,
            std::fabs(st.mu[l][j] - col.final_mu[l][static_cast<size_t>(s) * sz + j]));
    }
    WeightGradients wg = weight_gradients(st, t.params, t.prec);
    for (int n = 0; n < t.topo.num_layers() - 1; ++n) {
      for (size_t k = 0; k < wg.dw[n].size(); ++k) ref_sum.dw[n].data[k] += wg.dw[n].data[k];
      for (size_t k = 0; k < wg.db[n].size(); ++k) ref_sum.db[n][k] += wg.db[n][k];
    }
  }
  CHECK(max_fe_diff < 1e-9);
  CHECK(max_mu_diff < 1e-10);
  for (int n = 0; n < t.topo.num_layers() - 1; ++n) {
    for (size_t k = 0; k < ref_sum.dw[n].size(); ++k)
      CHECK(engine_grads.dw[n].data[k] == doctest::Approx(ref_sum.dw[n].data[k] / N).epsilon(1e-9));
    for (size_t k = 0; k < ref_sum.db[n].size(); ++k)
      CHECK(engine_grads.db[n][k] == doctest::Approx(ref_sum.db[n][k] / N).epsilon(1e-9));
  }
}

TEST_CASE("engine output is independent of the thread count") {
  const int N = kChunkSamples * 2 + kChunkSamples / 2, iters = 25;
  auto run = [&](int threads) {
    omp_set_num_threads(threads);
    ToySetup t = make_setup(99, N, false);
    Collector col(iters, N, t.topo);
    SettleOptions opts;
    opts.iterations = iters;
    opts.node_lr = 0.02;
    opts.trace_free_energy = true;
    SeededRng rng(1);
    WeightGradients grads;
    double fe = 0;
    settle_samples(t.params, t.prec, t.batch, rng, opts, &col, &grads, &fe);
    return std::tuple(col.final_mu, col.fe, grads.dw[0].data, fe);
  };
  auto a = run(1);
  auto b = run(3);
  auto c = run(8);
  omp_set_num_threads(omp_get_num_procs());
  CHECK(std::get<0>(a) == std::get<0>(b));
  CHECK(std::get<0>(a) == std::get<0>(c));
  CHECK(std::get<1>(a) == std::get<1>(b));
  CHECK(std::get<2>(a) == std::get<2>(c));  // gradient bits
  CHECK(std::get<3>(a) == std::get<3>(b));  // mean free energy bits
}

TEST_CASE("train_batch") {
  SUBCASE("identical fully-clamped samples average to the single-sample gradient") {
    ToySetup t = make_setup(3, 8, true);
    // clamp everything so per-sample settles are trivially identical
    for (auto& layer : t.batch.mask.fixed)
      for (auto& f : layer) f = 1;
    for (int n = 0; n < t.topo.num_layers(); ++n) {
      t.batch.clamp_rows[n] = Matrix(8, t.topo.size(n));
      for (int s = 0; s < 8; ++s)
        for (int j = 0; j < t.topo.size(n); ++j) t.batch.clamp_rows[n](s, j) = 0.1 * (j + 1);
    }
    SeededRng rng(5);
    WeightGradients avg;
    SettleOptions opts;
    opts.iterations = 5;
    settle_samples(t.params, t.prec, t.batch, rng, opts, nullptr, &avg);

    BatchInput one = t.batch;
    one.num_samples = 1;
    for (int n = 0; n < t.topo.num_layers(); ++n)
      if (one.clamp_rows[n].rows > 0) {
        Matrix m(1, t.topo.size(n));
        for (int j = 0; j < t.topo.size(n); ++j) m(0, j) = t.batch.clamp_rows[n](0, j);
        one.clamp_rows[n] = m;
      }
    SeededRng rng2(5);
    WeightGradients single;
    settle_samples(t.params, t.prec, one, rng2, opts, nullptr, &single);
    for (size_t k = 0; k < avg.dw[0].size(); ++k)
      CHECK(avg.dw[0].data[k] == doctest::Approx(single.dw[0].data[k]).epsilon(1e-12));
  }

  SUBCASE("one step decreases the re-settled batch free energy") {
    ToySetup t = make_setup(11, 32, true);
    AdamStates adam = make_adam_states(t.params);
    TrainBatchConfig cfg;
    cfg.iterations = 60;
    cfg.node_lr = 0.02;
    cfg.weight_lr = 1e-2;  // large enough to see movement in one step

    SettleOptions probe;
    probe.iterations = 60;
    probe.node_lr = 0.02;
    double before = 0, after = 0;
    SeededRng r1(42);
    settle_samples(t.params, t.prec, t.batch, r1, probe, nullptr, nullptr, &before);
    SeededRng r2(42);
    train_batch(t.params, adam, t.prec, t.batch, r2, cfg);
    SeededRng r3(42);
    settle_samples(t.params, t.prec, t.batch, r3, probe, nullptr, nullptr, &after);
    CHECK(after < before);
  }

  SUBCASE("bit-identical given the same seed") {
    auto run = [] {
      ToySetup t = make_setup(21, 48, true);
      AdamStates adam = make_adam_states(t.params);
      TrainBatchConfig cfg;
      cfg.iterations = 10;
      SeededRng rng(9);
      train_batch(t.params, adam, t.prec, t.batch, rng, cfg);
      return t.params;
    };
    CHECK(run() == run());
  }
}

TEST_CASE("settle with zero iterations only applies clamps and inits") {
  ToySetup t = make_setup(2, 10, true);
  Collector col(0, 10, t.topo);
  SettleOptions opts;
  opts.iterations = 0;
  SeededRng rng(4);
  settle_samples(t.params, t.prec, t.batch, rng, opts, &col, nullptr);
  // clamped rows must equal the provided clamp values exactly
  int L = t.topo.num_layers();
  for (int j = 0; j < t.topo.size(L - 1) - 2; ++j)
    CHECK(col.final_mu[L - 1][j] == t.batch.clamp_rows[L - 1](0, j));
}
