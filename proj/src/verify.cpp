#include "pcnlab/verify.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace pcnlab {

NetworkTopology random_toy_topology(SeededRng& rng, int max_layers, int max_nodes) {
  int L = 2 + static_cast<int>(rng.below(max_layers - 1));
  std::vector<int> sizes(L);
  for (int& s : sizes) s = 1 + static_cast<int>(rng.below(max_nodes));
  return NetworkTopology(sizes);
}

namespace {

struct ToyCase {
  NetworkTopology topo;
  NetworkParams params;
  ClampMask mask;
  ActivationState state;
  PrecisionConfig prec;
};

// Random network, random clamp pattern, node values spread across the
// responsive range of tanh.
ToyCase make_toy(SeededRng& rng, bool with_clamps) {
  ToyCase t;
  t.topo = random_toy_topology(rng);
  t.params = init_network(t.topo, rng);
  t.prec = PrecisionConfig(t.topo);
  t.mask = ClampMask::none(t.topo);
  int L = t.topo.num_layers();
  if (with_clamps) {
    for (int n = 0; n < L; ++n)
      for (int j = 0; j < t.topo.size(n); ++j) t.mask.fixed[n][j] = rng.below(10) < 3 ? 1 : 0;
  }
  t.state.mu.resize(L);
  t.state.errors.resize(L);
  for (int n = 0; n < L; ++n) {
    t.state.mu[n].resize(t.topo.size(n));
    for (double& v : t.state.mu[n]) v = rng.normal(0.2, 0.8);
  }
  compute_errors(t.state, t.params);
  return t;
}

bool close(double a, double b, double rel, double abs_floor) {
  double diff = std::fabs(a - b);
  if (diff <= abs_floor) return true;
  return diff <= rel * std::max(std::fabs(a), std::fabs(b));
}

}  // namespace

bool check_gradients(const VerifyOptions& opts, std::string* detail, const VerifyHooks& hooks) {
  SeededRng rng(opts.seed);
  int node_checked = 0, weight_checked = 0;
  for (int trial = 0; trial < opts.gradient_trials; ++trial) {
    ToyCase t = make_toy(rng, trial % 2 == 1);

    auto grads = hooks.node_gradients_override
                     ? hooks.node_gradients_override(t.state, t.params, t.mask, t.prec)
                     : node_gradients(t.state, t.params, t.mask, t.prec);
    int L = t.topo.num_layers();
    for (int n = 0; n < L; ++n) {
      Vector fd = finite_diff_grad(
          [&](const Vector& v) {
            ActivationState probe = t.state;
            probe.mu[n] = v;
            compute_errors(probe, t.params);
            return free_energy(probe, t.params, t.prec);
          },
          t.state.mu[n], 1e-5);
      for (int j = 0; j < t.topo.size(n); ++j) {
        if (t.mask.fixed[n][j]) continue;  // clamped nodes have no defined gradient
        ++node_checked;
        if (!close(grads[n][j], fd[j], opts.gradient_rel_tol, opts.gradient_abs_floor)) {
          if (detail) {
            std::ostringstream s;
            s << "node gradient mismatch trial " << trial << " layer " << n << " node " << j
              << ": analytic " << grads[n][j] << " vs fd " << fd[j];
            *detail = s.str();
          }
          return false;
        }
      }
    }

    auto wg = hooks.weight_gradients_override
                  ? hooks.weight_gradients_override(t.state, t.params, t.prec)
                  : weight_gradients(t.state, t.params, t.prec);
    for (int n = 0; n < L - 1; ++n) {
      Vector flat_w = t.params.weights[n].data;
      Vector fd_w = finite_diff_grad(
          [&](const Vector& v) {
            NetworkParams probe = t.params;
            probe.weights[n].data = v;
            ActivationState st = t.state;
            compute_errors(st, probe);
            return free_energy(st, probe, t.prec);
          },
          flat_w, 1e-5);
      for (size_t k = 0; k < flat_w.size(); ++k) {
        ++weight_checked;
        if (!close(wg.dw[n].data[k], fd_w[k], opts.gradient_rel_tol, opts.gradient_abs_floor)) {
          if (detail)
            *detail = "weight gradient mismatch trial " + std::to_string(trial) + " layer " +
                      std::to_string(n) + " entry " + std::to_string(k);
          return false;
        }
      }
      Vector fd_b = finite_diff_grad(
          [&](const Vector& v) {
            NetworkParams probe = t.params;
            probe.biases[n] = v;
            ActivationState st = t.state;
            compute_errors(st, probe);
            return free_energy(st, probe, t.prec);
          },
          t.params.biases[n], 1e-5);
      for (size_t k = 0; k < fd_b.size(); ++k) {
        if (!close(wg.db[n][k], fd_b[k], opts.gradient_rel_tol, opts.gradient_abs_floor)) {
          if (detail)
            *detail = "bias gradient mismatch trial " + std::to_string(trial) + " layer " +
                      std::to_string(n);
          return false;
        }
      }
    }
  }
  if (detail)
    *detail = std::to_string(node_checked) + " node + " + std::to_string(weight_checked) +
              " weight entries across " + std::to_string(opts.gradient_trials) + " networks";
  return true;
}

bool check_descent(const VerifyOptions& opts, std::string* detail) {
  for (int s = 0; s < opts.descent_seeds; ++s) {
    SeededRng rng(opts.seed + 1000 + s);
    ToyCase t = make_toy(rng, s % 2 == 0);
    InferTrace trace;
    ActivationState st = t.state;
    infer(st, t.params, t.mask, t.prec, 200, opts.descent_node_lr, &trace);
    double final_fe = free_energy(st, t.params, t.prec);
    for (size_t i = 0; i + 1 < trace.free_energy.size(); ++i) {
      if (trace.free_energy[i + 1] > trace.free_energy[i] + 1e-12) {
        if (detail)
          *detail = "free energy rose at seed " + std::to_string(s) + " iteration " +
                    std::to_string(i) + ": " + std::to_string(trace.free_energy[i]) + " -> " +
                    std::to_string(trace.free_energy[i + 1]);
        return false;
      }
    }
    if (!trace.free_energy.empty() && final_fe > trace.free_energy.back() + 1e-12) {
      if (detail) *detail = "final free energy above last traced value";
      return false;
    }
  }
  if (detail)
    *detail = "non-increasing over 200 iterations for " + std::to_string(opts.descent_seeds) +
              " seeds at lr " + std::to_string(opts.descent_node_lr);
  return true;
}

bool check_clamp_invariance(uint64_t seed, std::string* detail) {
  SeededRng rng(seed);
  for (int trial = 0; trial < 5; ++trial) {
    ToyCase t = make_toy(rng, true);
    ActivationState st = t.state;
    infer(st, t.params, t.mask, t.prec, 200, 0.025);
    int L = t.topo.num_layers();
    for (int n = 0; n < L; ++n)
      for (int j = 0; j < t.topo.size(n); ++j)
        if (t.mask.fixed[n][j] && st.mu[n][j] != t.state.mu[n][j]) {
          if (detail)
            *detail = "clamped node moved: layer " + std::to_string(n) + " node " +
                      std::to_string(j);
          return false;
        }
  }
  if (detail) *detail = "clamped nodes bit-identical after 200 iterations, 5 networks";
  return true;
}

bool check_stationarity(uint64_t seed, std::string* detail) {
  SeededRng rng(seed);
  for (int trial = 0; trial < 5; ++trial) {
    ToyCase t = make_toy(rng, false);
    // make every error exactly zero: each layer equals its prediction
    int L = t.topo.num_layers();
    for (int n = 0; n + 1 < L; ++n) t.state.mu[n + 1] = predict_layer(t.params, t.state, n);
    compute_errors(t.state, t.params);
    if (free_energy(t.state, t.params, t.prec) != 0.0) {
      if (detail) *detail = "constructed state has nonzero free energy";
      return false;
    }
    ActivationState st = t.state;
    infer(st, t.params, t.mask, t.prec, 1, 0.025);
    for (int n = 0; n < L; ++n)
      if (st.mu[n] != t.state.mu[n]) {
        if (detail) *detail = "node values moved at a zero-error stationary point";
        return false;
      }
    WeightGradients wg = weight_gradients(st, t.params, t.prec);
    for (int n = 0; n < L - 1; ++n)
      for (double g : wg.dw[n].data)
        if (g != 0.0) {
          if (detail) *detail = "nonzero weight gradient at a zero-error stationary point";
          return false;
        }
  }
  if (detail) *detail = "zero-error states are exact fixed points, 5 networks";
  return true;
}

bool check_ablation_identity(uint64_t seed, std::string* detail) {
  SeededRng rng(seed);
  for (int trial = 0; trial < 5; ++trial) {
    ToyCase t = make_toy(rng, true);
    NetworkParams same = ablate(t.params, 0);
    if (!(same == t.params)) {
      if (detail) *detail = "ablate(k=0) changed the parameters";
      return false;
    }
    ActivationState a = t.state, b = t.state;
    infer(a, t.params, t.mask, t.prec, 50, 0.025);
    infer(b, same, t.mask, t.prec, 50, 0.025);
    for (int n = 0; n < t.topo.num_layers(); ++n)
      if (a.mu[n] != b.mu[n]) {
        if (detail) *detail = "ablate(k=0) inference diverged from the original network";
        return false;
      }
  }
  if (detail) *detail = "ablate(k=0) bit-identical to the original, 5 networks";
  return true;
}

VerifyReport run_verification(const VerifyOptions& opts, const VerifyHooks& hooks) {
  VerifyReport rep;
  std::ostringstream out;
  auto run = [&](const char* name, bool ok, const std::string& detail) {
    out << (ok ? "PASS" : "FAIL") << "  " << name << ": " << detail << "\n";
    (ok ? rep.passed : rep.failed) += 1;
  };
  std::string d;
  run("gradient_oracle", check_gradients(opts, &d, hooks), d);
  run("monotone_descent", check_descent(opts, &d), d);
  run("clamp_invariance", check_clamp_invariance(opts.seed + 7, &d), d);
  run("stationarity", check_stationarity(opts.seed + 8, &d), d);
  run("ablation_identity", check_ablation_identity(opts.seed + 9, &d), d);
  rep.text = out.str();
  return rep;
}

}  // namespace pcnlab
