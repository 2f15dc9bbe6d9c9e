#pragma once

#include <functional>
#include <iosfwd>
#include <string>

#include "pcnlab/network.hpp"

namespace pcnlab {

// Self-contained correctness checks on random toy networks (no dataset
// needed): analytic gradients against central finite differences, monotone
// free-energy descent, clamp invariance, stationarity at zero error, and the
// k=0 ablation identity.

struct VerifyOptions {
  int gradient_trials = 50;
  int descent_seeds = 20;
  uint64_t seed = 1234;
  double gradient_rel_tol = 1e-6;
  double gradient_abs_floor = 1e-8;
  double descent_node_lr = 0.001;
};

// Test hook: lets a deliberately wrong gradient be injected to prove the
// checker actually fails on bad gradients.
struct VerifyHooks {
  std::function<std::vector<Vector>(const ActivationState&, const NetworkParams&,
                                    const ClampMask&, const PrecisionConfig&)>
      node_gradients_override;
  std::function<WeightGradients(const ActivationState&, const NetworkParams&,
                                const PrecisionConfig&)>
      weight_gradients_override;
};

struct VerifyReport {
  int passed = 0;
  int failed = 0;
  std::string text;
  bool ok() const { return failed == 0; }
};

NetworkTopology random_toy_topology(SeededRng& rng, int max_layers = 4, int max_nodes = 10);

bool check_gradients(const VerifyOptions& opts, std::string* detail,
                     const VerifyHooks& hooks = {});
bool check_descent(const VerifyOptions& opts, std::string* detail);
bool check_clamp_invariance(uint64_t seed, std::string* detail);
bool check_stationarity(uint64_t seed, std::string* detail);
bool check_ablation_identity(uint64_t seed, std::string* detail);

VerifyReport run_verification(const VerifyOptions& opts, const VerifyHooks& hooks = {});

}  // namespace pcnlab
