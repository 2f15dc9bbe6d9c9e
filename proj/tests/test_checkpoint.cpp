#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pcnlab/checkpoint.hpp"

using namespace pcnlab;
namespace fs = std::filesystem;

namespace {

Checkpoint make_checkpoint() {
  SeededRng rng(5);
  Checkpoint ck;
  ck.task = "digit1";
  ck.noise_top = true;
  ck.seed = 42;
  ck.epoch = 7;
  ck.config_hash = 0xdeadbeefcafef00dull;
  ck.params = init_network(NetworkTopology({3, 5, 8}), rng);
  ck.adam = make_adam_states(ck.params);
  ck.adam.weights[0].m[2] = 0.125;
  ck.adam.weights[0].step = 31;
  ck.adam.biases[1].v[3] = -1e-17;
  return ck;
}

fs::path temp_file(const char* name) {
  return fs::temp_directory_path() / (std::string("pcnlab_ck_") + name + std::to_string(::getpid()));
}

}  // namespace

TEST_CASE("checkpoint round trip is bit-exact") {
  Checkpoint ck = make_checkpoint();
  fs::path p = temp_file("rt");
  save_checkpoint(ck, p.string());
  Checkpoint back = load_checkpoint(p.string());
  CHECK(back.task == ck.task);
  CHECK(back.noise_top == ck.noise_top);
  CHECK(back.seed == ck.seed);
  CHECK(back.epoch == ck.epoch);
  CHECK(back.config_hash == ck.config_hash);
  CHECK(back.params == ck.params);
  CHECK(back.adam.weights[0].m == ck.adam.weights[0].m);
  CHECK(back.adam.weights[0].step == 31);
  CHECK(back.adam.biases[1].v == ck.adam.biases[1].v);

  SUBCASE("saving twice produces identical bytes") {
    fs::path p2 = temp_file("rt2");
    save_checkpoint(ck, p2.string());
    std::ifstream a(p, std::ios::binary), b(p2, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), {});
    std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
    fs::remove(p2);
  }
  fs::remove(p);
}

TEST_CASE("checkpoint rejects garbage") {
  fs::path p = temp_file("bad");

  SUBCASE("missing file") { CHECK_THROWS_AS(load_checkpoint(p.string()), CheckpointError); }

  SUBCASE("bad magic") {
    std::ofstream(p.string(), std::ios::binary) << "NOTACKPTxxxxxxxxxxxxxxxx";
    CHECK_THROWS_AS(load_checkpoint(p.string()), CheckpointError);
    fs::remove(p);
  }

  SUBCASE("truncated") {
    Checkpoint ck = make_checkpoint();
    save_checkpoint(ck, p.string());
    auto size = fs::file_size(p);
    fs::resize_file(p, size / 2);
    CHECK_THROWS_AS(load_checkpoint(p.string()), CheckpointError);
    fs::remove(p);
  }
}
