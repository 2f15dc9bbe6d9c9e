#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "pcnlab/engine.hpp"
#include "pcnlab/network.hpp"

namespace pcnlab {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Versioned little-endian binary snapshot of a training run: topology,
// weights, optimizer state, and enough identity (task, seed, config hash) to
// refuse mismatched reuse. Round trips are bit-exact.
struct Checkpoint {
  std::string task;
  bool noise_top = false;
  uint64_t seed = 0;
  int epoch = 0;  // completed epochs
  uint64_t config_hash = 0;
  NetworkParams params;
  AdamStates adam;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace pcnlab
