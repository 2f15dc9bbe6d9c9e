#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pcnlab/network.hpp"
#include "pcnlab/verify.hpp"

using namespace pcnlab;

namespace {

ClampSpec free_clamps(const NetworkTopology& topo) {
  ClampSpec c;
  c.mask = ClampMask::none(topo);
  c.values.resize(topo.num_layers());
  for (int n = 0; n < topo.num_layers(); ++n) c.values[n].assign(topo.size(n), 0.0);
  return c;
}

}  // namespace

TEST_CASE("init_network") {
  NetworkTopology topo({2, 3});
  SeededRng r1(4), r2(4);
  NetworkParams a = init_network(topo, r1);
  NetworkParams b = init_network(topo, r2);
  CHECK(a == b);
  CHECK(a.weights[0].rows == 3);
  CHECK(a.weights[0].cols == 2);
  CHECK(a.biases[0].size() == 3);

  SUBCASE("weight statistics match 1/sqrt(fan_in) init") {
    NetworkTopology big({100, 1000});
    SeededRng rng(11);
    NetworkParams p = init_network(big, rng);
    double mean = 0, var = 0;
    for (double w : p.weights[0].data) mean += w;
    mean /= p.weights[0].size();
    for (double w : p.weights[0].data) var += (w - mean) * (w - mean);
    var /= p.weights[0].size() - 1;
    CHECK(std::fabs(mean) < 0.005);               // zero mean
    CHECK(std::fabs(std::sqrt(var) - 0.1) < 0.005);  // std = 1/sqrt(100)
    for (double b2 : p.biases[0]) CHECK(b2 == 0.0);
  }
}

TEST_CASE("init_state") {
  NetworkTopology topo({3, 100000});
  ClampSpec c = free_clamps(topo);
  // clamp the whole top layer
  c.mask.fixed[0] = {1, 1, 1};
  c.values[0] = {0.1, 0.2, 0.3};
  SeededRng rng(8);
  ActivationState s = init_state(topo, c, rng);
  CHECK(s.mu[0] == Vector{0.1, 0.2, 0.3});

  double mean = 0;
  for (double v : s.mu[1]) mean += v;
  mean /= s.mu[1].size();
  CHECK(std::fabs(mean - 0.5) < 0.005);

  SeededRng rng2(8);
  ActivationState s2 = init_state(topo, c, rng2);
  CHECK(s.mu[1] == s2.mu[1]);

  SUBCASE("shape mismatch throws") {
    c.values[0] = {0.1};
    c.mask.fixed[0] = {1};
    CHECK_THROWS_AS(init_state(topo, c, rng), ShapeError);
  }
}

TEST_CASE("predict_layer") {
  NetworkTopology topo({1, 1});
  NetworkParams p;
  p.topology = topo;
  p.weights.emplace_back(1, 1, 1.0);
  p.biases.emplace_back(1, 0.0);
  ActivationState s;
  s.mu = {{0.5}, {0.0}};
  s.errors.resize(2);

  Vector pred = predict_layer(p, s, 0);
  CHECK(pred[0] == doctest::Approx(0.46212).epsilon(1e-4));

  SUBCASE("zero weights and bias predict tanh(0)") {
    p.weights[0](0, 0) = 0.0;
    CHECK(predict_layer(p, s, 0)[0] == 0.0);
  }

  SUBCASE("out of range layer") {
    CHECK_THROWS_AS(predict_layer(p, s, 1), std::out_of_range);
    CHECK_THROWS_AS(predict_layer(p, s, -1), std::out_of_range);
  }
}

TEST_CASE("compute_errors") {
  SUBCASE("zero error when layer equals its prediction") {
    SeededRng rng(3);
    NetworkTopology topo({2, 3, 4});
    NetworkParams p = init_network(topo, rng);
    ActivationState s;
    s.mu.resize(3);
    s.errors.resize(3);
    s.mu[0] = {0.4, -0.2};
    s.mu[1] = affine(p.weights[0], s.mu[0], p.biases[0]);
    for (double& v : s.mu[1]) v = tanh_fast(v);
    s.mu[2] = affine(p.weights[1], s.mu[1], p.biases[1]);
    for (double& v : s.mu[2]) v = tanh_fast(v);
    compute_errors(s, p);
    for (double e : s.errors[1]) CHECK(e == 0.0);
    for (double e : s.errors[2]) CHECK(e == 0.0);
  }

  SUBCASE("scalar case") {
    NetworkTopology topo({1, 1});
    NetworkParams p;
    p.topology = topo;
    p.weights.emplace_back(1, 1, 0.0);
    p.biases.emplace_back(1, 0.3);
    ActivationState s;
    s.mu = {{0.0}, {1.0}};
    s.errors.resize(2);
    compute_errors(s, p);
    CHECK(s.errors[1][0] == doctest::Approx(1.0 - std::tanh(0.3)).epsilon(1e-9));
  }

  SUBCASE("shapes preserved on the paper topology") {
    SeededRng rng(5);
    NetworkTopology topo({10, 100, 300, 785});
    NetworkParams p = init_network(topo, rng);
    ClampSpec c = free_clamps(topo);
    ActivationState s = init_state(topo, c, rng);
    compute_errors(s, p);
    CHECK(s.errors[1].size() == 100);
    CHECK(s.errors[2].size() == 300);
    CHECK(s.errors[3].size() == 785);
  }
}

TEST_CASE("free_energy") {
  NetworkTopology topo({2, 2});
  PrecisionConfig prec(topo);
  NetworkParams p;
  p.topology = topo;
  p.weights.emplace_back(2, 2, 0.0);
  p.biases.emplace_back(2, 0.0);
  ActivationState s;
  s.mu = {{0.0, 0.0}, {1.0, 0.0}};
  s.errors.resize(2);
  compute_errors(s, p);
  // single error vector [1, 0] with identity precision
  CHECK(free_energy(s, p, prec) == doctest::Approx(0.5));

  s.mu[1] = {0.0, 0.0};
  compute_errors(s, p);
  CHECK(free_energy(s, p, prec) == 0.0);
}

// The gradient oracle; criterion-level property over many random networks
// lives in the acceptance suite, this is the fast development version.
TEST_CASE("node and weight gradients match finite differences") {
  VerifyOptions opts;
  opts.gradient_trials = 10;
  opts.seed = 2024;
  std::string detail;
  bool ok = check_gradients(opts, &detail);
  INFO(detail);
  CHECK(ok);
}

TEST_CASE("gradient checker fails loudly on a sign flip") {
  VerifyOptions opts;
  opts.gradient_trials = 3;
  opts.seed = 2024;
  VerifyHooks hooks;
  hooks.node_gradients_override = [](const ActivationState& s, const NetworkParams& p,
                                     const ClampMask& m, const PrecisionConfig& pr) {
    auto g = node_gradients(s, p, m, pr);
    for (auto& layer : g)
      for (double& v : layer) v = -v;
    return g;
  };
  std::string detail;
  CHECK_FALSE(check_gradients(opts, &detail, hooks));
}

TEST_CASE("zero-error state is a stationary point") {
  std::string detail;
  bool ok = check_stationarity(40, &detail);
  INFO(detail);
  CHECK(ok);
}

TEST_CASE("infer") {
  SeededRng rng(17);
  NetworkTopology topo({3, 5, 4});
  NetworkParams p = init_network(topo, rng);
  PrecisionConfig prec(topo);
  ClampSpec c = free_clamps(topo);
  // clamp the bottom layer to fixed data
  for (auto& f : c.mask.fixed[2]) f = 1;
  c.values[2] = gaussian_sample(rng, 0.5, 0.2, 4);
  ActivationState s0 = init_state(topo, c, rng);

  SUBCASE("zero iterations leaves mu unchanged") {
    ActivationState s = s0;
    infer(s, p, c.mask, prec, 0, 0.025);
    for (int n = 0; n < 3; ++n) CHECK(s.mu[n] == s0.mu[n]);
  }

  SUBCASE("free energy is non-increasing at small lr") {
    ActivationState s = s0;
    InferTrace trace;
    infer(s, p, c.mask, prec, 200, 0.001, &trace);
    REQUIRE(trace.free_energy.size() == 200);
    for (size_t i = 0; i + 1 < trace.free_energy.size(); ++i)
      CHECK(trace.free_energy[i + 1] <= trace.free_energy[i] + 1e-12);
  }

  SUBCASE("clamped values are bit-identical after 200 iterations") {
    ActivationState s = s0;
    infer(s, p, c.mask, prec, 200, 0.025);
    CHECK(s.mu[2] == s0.mu[2]);
  }
}

TEST_CASE("weight_gradients structure") {
  SeededRng rng(23);
  NetworkTopology topo({2, 3});
  NetworkParams p = init_network(topo, rng);
  PrecisionConfig prec(topo);

  SUBCASE("zero errors give zero gradients") {
    ActivationState s;
    s.mu = {{0.3, -0.1}, {0, 0, 0}};
    s.errors.resize(2);
    s.mu[1] = tanh_map(affine(p.weights[0], s.mu[0], p.biases[0]));
    compute_errors(s, p);
    WeightGradients g = weight_gradients(s, p, prec);
    for (double v : g.dw[0].data) CHECK(v == 0.0);
    for (double v : g.db[0]) CHECK(v == 0.0);
  }

  SUBCASE("zero input zeroes dW but not db") {
    ActivationState s;
    s.mu = {{0.0, 0.0}, {0.9, 0.9, 0.9}};
    s.errors.resize(2);
    compute_errors(s, p);
    WeightGradients g = weight_gradients(s, p, prec);
    for (double v : g.dw[0].data) CHECK(v == 0.0);
    bool any_bias = false;
    for (double v : g.db[0]) any_bias |= v != 0.0;
    CHECK(any_bias);
  }
}

TEST_CASE("ablate") {
  SeededRng rng(31);
  NetworkParams p = init_network(NetworkTopology({10, 100, 300, 785}), rng);

  SUBCASE("k=0 is the identity") {
    std::string detail;
    bool ok = check_ablation_identity(77, &detail);
    INFO(detail);
    CHECK(ok);
  }

  SUBCASE("k=2 keeps the bottom two layers") {
    NetworkParams a = ablate(p, 2);
    CHECK(a.topology.layer_sizes == std::vector<int>{300, 785});
    CHECK(a.weights.size() == 1);
    CHECK(a.weights[0] == p.weights[2]);
  }

  SUBCASE("k=5 on the 7-layer network leaves [300, 794]") {
    SeededRng r2(1);
    NetworkParams seven = init_network(NetworkTopology({10, 25, 50, 100, 200, 300, 794}), r2);
    NetworkParams a = ablate(seven, 5);
    CHECK(a.topology.layer_sizes == std::vector<int>{300, 794});
  }

  SUBCASE("k out of range") {
    CHECK_THROWS_AS(ablate(p, 3), std::invalid_argument);
    CHECK_THROWS_AS(ablate(p, -1), std::invalid_argument);
  }
}

TEST_CASE("clamp invariance over random masks") {
  std::string detail;
  bool ok = check_clamp_invariance(91, &detail);
  INFO(detail);
  CHECK(ok);
}
