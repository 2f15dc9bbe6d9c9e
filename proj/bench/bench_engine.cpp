// Compares the serial per-sample reference against the lockstep chunked
// engine at 1 and N OpenMP threads on a training-shaped workload, and
// projects full-run times.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <vector>

#include "pcnlab/blas.hpp"
#include "pcnlab/engine.hpp"

using namespace pcnlab;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// one forward + one backward matvec per weight matrix, per sample-iteration
double flops_per_sample_iteration(const NetworkTopology& topo) {
  double macs = 0;
  for (int n = 0; n < topo.num_layers() - 1; ++n)
    macs += 2.0 * topo.size(n) * topo.size(n + 1);
  return 2.0 * macs;
}

}  // namespace

int main() {
  NetworkTopology topo({10, 100, 300, 785});
  SeededRng rng(1);
  NetworkParams params = init_network(topo, rng);
  PrecisionConfig prec(topo);

  const int N = 256;
  const int iters = 30;
  int L = topo.num_layers();

  // training-mode clamps: top and bottom fixed to synthetic data
  BatchInput batch;
  batch.mask = ClampMask::none(topo);
  for (auto& f : batch.mask.fixed[0]) f = 1;
  for (auto& f : batch.mask.fixed[L - 1]) f = 1;
  batch.num_samples = N;
  batch.clamp_rows.resize(L);
  batch.clamp_rows[0] = Matrix(N, topo.size(0));
  batch.clamp_rows[L - 1] = Matrix(N, topo.size(L - 1));
  for (double& v : batch.clamp_rows[0].data) v = rng.below(2) ? 1.0 : 0.0;
  for (double& v : batch.clamp_rows[L - 1].data) v = rng.uniform01();

  std::printf("blas backend: %s\n", blas::backend());
  std::printf("network [10,100,300,785], %d samples, %d iterations\n\n", N, iters);
  double flops = flops_per_sample_iteration(topo) * N * iters;

  // serial reference, a few samples extrapolated
  {
    const int ref_n = 8;
    SeededRng sr(2);
    auto t0 = Clock::now();
    for (int s = 0; s < ref_n; ++s) {
      ClampSpec c;
      c.mask = batch.mask;
      c.values.resize(L);
      for (int n = 0; n < L; ++n) {
        c.values[n].assign(topo.size(n), 0.0);
        if (batch.clamp_rows[n].rows > 0)
          c.values[n].assign(batch.clamp_rows[n].row(s), batch.clamp_rows[n].row(s) + topo.size(n));
      }
      ActivationState st = init_state(topo, c, sr);
      infer(st, params, c.mask, prec, iters, 0.025);
    }
    double dt = seconds_since(t0);
    double per = dt / (double(ref_n) * iters);
    std::printf("reference serial    : %8.2f us/sample-iter  %6.2f GFlop/s\n", per * 1e6,
                flops_per_sample_iteration(topo) / per / 1e9);
  }

  for (int threads : {1, omp_get_num_procs()}) {
    omp_set_num_threads(threads);
    SeededRng er(2);
    SettleOptions opts;
    opts.iterations = iters;
    opts.node_lr = 0.025;
    WeightGradients grads;
    auto t0 = Clock::now();
    settle_samples(params, prec, batch, er, opts, nullptr, &grads);
    double dt = seconds_since(t0);
    double per = dt / (double(N) * iters);
    std::printf("engine (%d threads) : %8.2f us/sample-iter  %6.2f GFlop/s\n", threads,
                per * 1e6, flops / dt / 1e9);
    if (threads == 1) {
      // one epoch = 60000 samples x 200 iterations (plus weight grads)
      double epoch_s = per * 60000.0 * 200.0;
      std::printf("  -> projected %.1f min/epoch, %.1f min per 10-epoch training\n",
                  epoch_s / 60.0, epoch_s * 10.0 / 60.0);
    }
  }
  return 0;
}
