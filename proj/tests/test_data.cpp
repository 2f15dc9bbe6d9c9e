#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "pcnlab/data.hpp"

using namespace pcnlab;
namespace fs = std::filesystem;

namespace {

// writes a little-endian-free (big-endian) IDX pair with deterministic pixels
struct Fixture {
  fs::path dir;
  std::string images, labels;
  int count;

  explicit Fixture(int n, uint32_t image_magic = 2051, uint32_t label_magic = 2049,
                   bool truncate_pixels = false, int label_count = -1)
      : count(n) {
    dir = fs::temp_directory_path() / ("pcnlab_data_test_" + std::to_string(::getpid()) + "_" +
                                       std::to_string(counter()++));
    fs::create_directories(dir);
    images = (dir / "img.idx").string();
    labels = (dir / "lab.idx").string();
    {
      std::ofstream f(images, std::ios::binary);
      put32(f, image_magic);
      put32(f, n);
      put32(f, 28);
      put32(f, 28);
      std::vector<uint8_t> px(truncate_pixels ? n * 784 - 100 : n * 784);
      for (size_t i = 0; i < px.size(); ++i) px[i] = static_cast<uint8_t>((i * 7 + i / 784) % 251);
      f.write(reinterpret_cast<char*>(px.data()), px.size());
    }
    {
      std::ofstream f(labels, std::ios::binary);
      put32(f, label_magic);
      int lc = label_count < 0 ? n : label_count;
      put32(f, lc);
      std::vector<uint8_t> lab(lc);
      for (int i = 0; i < lc; ++i) lab[i] = static_cast<uint8_t>(i % 10);
      f.write(reinterpret_cast<char*>(lab.data()), lab.size());
    }
  }
  ~Fixture() { fs::remove_all(dir); }

  static int& counter() {
    static int c = 0;
    return c;
  }
  static void put32(std::ofstream& f, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    f.write(reinterpret_cast<char*>(b), 4);
  }
};

}  // namespace

TEST_CASE("load_idx") {
  SUBCASE("well-formed files round-trip") {
    Fixture fx(50);
    RawData d = load_idx(fx.images, fx.labels);
    CHECK(d.count == 50);
    CHECK(d.pixels.size() == 50 * 784);
    CHECK(d.labels[13] == 3);
  }

  SUBCASE("bad image magic names the offset and expected value") {
    Fixture fx(5, 2052);
    try {
      load_idx(fx.images, fx.labels);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      std::string msg = e.what();
      CHECK(msg.find("offset 0") != std::string::npos);
      CHECK(msg.find("2051") != std::string::npos);
    }
  }

  SUBCASE("bad label magic") {
    Fixture fx(5, 2051, 7);
    CHECK_THROWS_AS(load_idx(fx.images, fx.labels), ParseError);
  }

  SUBCASE("truncated pixel data") {
    Fixture fx(5, 2051, 2049, true);
    CHECK_THROWS_AS(load_idx(fx.images, fx.labels), ParseError);
  }

  SUBCASE("count mismatch") {
    Fixture fx(5, 2051, 2049, false, 4);
    CHECK_THROWS_AS(load_idx(fx.images, fx.labels), ParseError);
  }

  SUBCASE("missing file") { CHECK_THROWS_AS(load_idx("/nonexistent", "/nonexistent"), ParseError); }
}

TEST_CASE("apply_bar") {
  Image zero{};
  Image barred = apply_bar(zero);

  SUBCASE("exactly 56 pixels set on an all-zero image") {
    int ones = 0, other = 0;
    for (double v : barred.px) {
      if (v == 1.0) ++ones;
      else if (v != 0.0) ++other;
    }
    CHECK(ones == 56);
    CHECK(other == 0);
    CHECK(barred.at(13, 0) == 1.0);
    CHECK(barred.at(14, 27) == 1.0);
    CHECK(barred.at(12, 0) == 0.0);
    CHECK(barred.at(15, 0) == 0.0);
  }

  SUBCASE("idempotent") {
    Image twice = apply_bar(barred);
    CHECK(twice.px == barred.px);
  }

  SUBCASE("range preserved") {
    SeededRng rng(3);
    Image img;
    for (double& v : img.px) v = rng.uniform01();
    Image b = apply_bar(img);
    for (double v : b.px) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("build_task rules") {
  Fixture fx(40);
  RawData raw = load_idx(fx.images, fx.labels);
  SeededRng rng(1);

  SUBCASE("digit1: action fires only for label 1") {
    TaskData t = build_task(TaskSpec::make(TaskId::digit1), raw, raw, rng, 0);
    for (int i = 0; i < t.train.count; ++i)
      CHECK(t.train.actions[i] == (t.train.labels[i] == 1 ? 1 : 0));
  }

  SUBCASE("groups: action fires for labels < 5") {
    TaskData t = build_task(TaskSpec::make(TaskId::groups), raw, raw, rng, 0);
    for (int i = 0; i < t.train.count; ++i)
      CHECK(t.train.actions[i] == (t.train.labels[i] < 5 ? 1 : 0));
  }

  SUBCASE("barred: exact half split, labels shifted by 10, bar applied") {
    TaskData t = build_task(TaskSpec::make(TaskId::barred), raw, raw, rng, 0);
    int barred_count = 0;
    for (int i = 0; i < t.train.count; ++i) {
      bool is_barred = t.train.labels[i] >= 10;
      barred_count += is_barred;
      CHECK(t.train.actions[i] == (is_barred ? 1 : 0));
      const uint8_t* px = t.train.image(i);
      bool row_full = true;
      for (int c2 = 0; c2 < 28; ++c2) row_full &= px[13 * 28 + c2] == 255;
      if (is_barred) CHECK(row_full);
    }
    CHECK(barred_count == t.train.count / 2);
  }

  SUBCASE("test subset is sampled without replacement") {
    TaskData t = build_task(TaskSpec::make(TaskId::digit1), raw, raw, rng, 12);
    CHECK(t.test.count == 12);
    CHECK(t.train.count == 40);
  }

  SUBCASE("barred test subset of even size splits exactly in half") {
    TaskData t = build_task(TaskSpec::make(TaskId::barred), raw, raw, rng, 16);
    int barred_count = 0;
    for (int i = 0; i < t.test.count; ++i) barred_count += t.test.labels[i] >= 10;
    CHECK(barred_count == 8);
  }
}

TEST_CASE("batches") {
  SeededRng rng(2);
  SUBCASE("60000 into 640 gives 94 batches, last of 480") {
    auto b = batches(60000, 640, rng);
    CHECK(b.size() == 94);
    CHECK(b.front().size() == 640);
    CHECK(b.back().size() == 480);
  }

  SUBCASE("batch_size 1") {
    auto b = batches(5, 1, rng);
    CHECK(b.size() == 5);
  }

  SUBCASE("same seed, same order; every index exactly once") {
    SeededRng r1(9), r2(9);
    auto a = batches(1000, 128, r1);
    auto b = batches(1000, 128, r2);
    CHECK(a == b);
    std::set<int> seen;
    for (const auto& batch : a) seen.insert(batch.begin(), batch.end());
    CHECK(seen.size() == 1000);
  }
}

TEST_CASE("encode_clamps") {
  Fixture fx(30);
  RawData raw = load_idx(fx.images, fx.labels);
  SeededRng rng(7);

  SUBCASE("digit1 train: one-hot top, pixels + action at the bottom, all clamped") {
    TaskSpec spec = TaskSpec::make(TaskId::digit1);
    TaskData t = build_task(spec, raw, raw, rng, 0);
    int idx = 12;  // label 2 under the fixture's labelling
    ClampSpec c = encode_clamps(t.train, idx, spec, Mode::train);
    CHECK(c.values[0][t.train.labels[idx]] == 1.0);
    int hot = 0;
    for (double v : c.values[0]) hot += v == 1.0;
    CHECK(hot == 1);
    for (uint8_t f : c.mask.fixed[0]) CHECK(f == 1);
    for (uint8_t f : c.mask.fixed[3]) CHECK(f == 1);
    CHECK(c.values[3][784] == t.train.actions[idx]);
    // pixel normalization is the exact byte scale
    CHECK(c.values[3][100] == t.train.image(idx)[100] / 255.0);
    // bijection back to bytes
    for (int j = 0; j < 784; ++j)
      CHECK(static_cast<int>(c.values[3][j] * 255.0 + 0.5) == t.train.image(idx)[j]);
  }

  SUBCASE("test mode: exactly 784 mask bits, all in the bottom layer") {
    TaskSpec spec = TaskSpec::make(TaskId::digit1);
    TaskData t = build_task(spec, raw, raw, rng, 0);
    ClampSpec c = encode_clamps(t.test, 0, spec, Mode::test);
    size_t bits = 0;
    for (const auto& layer : c.mask.fixed)
      for (uint8_t f : layer) bits += f;
    CHECK(bits == 784);
    CHECK(c.mask.fixed[3][784] == 0);  // action node free
    for (int n = 0; n < 3; ++n)
      for (uint8_t f : c.mask.fixed[n]) CHECK(f == 0);
  }

  SUBCASE("noise-top: different examples draw different top clamps") {
    TaskSpec spec = TaskSpec::make(TaskId::digit1);
    spec.noise_top = true;
    TaskData t = build_task(spec, raw, raw, rng, 0);
    SeededRng noise(42);
    ClampSpec a = encode_clamps(t.train, 0, spec, Mode::train, &noise);
    ClampSpec b = encode_clamps(t.train, 1, spec, Mode::train, &noise);
    CHECK(a.values[0] != b.values[0]);
    // drawn around 0.5, not one-hot
    for (double v : a.values[0]) CHECK(std::abs(v - 0.5) < 0.5);
    CHECK_THROWS_AS(encode_clamps(t.train, 0, spec, Mode::train, nullptr),
                    std::invalid_argument);
  }

  SUBCASE("onehot_bottom: train clamps all 794 bottom nodes, test only pixels") {
    TaskSpec spec = TaskSpec::make(TaskId::onehot_bottom);
    TaskData t = build_task(spec, raw, raw, rng, 0);
    ClampSpec train = encode_clamps(t.train, 5, spec, Mode::train);
    int L = spec.topology.num_layers();
    for (uint8_t f : train.mask.fixed[L - 1]) CHECK(f == 1);
    for (int n = 0; n < L - 1; ++n)
      for (uint8_t f : train.mask.fixed[n]) CHECK(f == 0);
    CHECK(train.values[L - 1][784 + t.train.actions[5]] == 1.0);

    ClampSpec test = encode_clamps(t.test, 5, spec, Mode::test);
    size_t bits = 0;
    for (const auto& layer : test.mask.fixed)
      for (uint8_t f : layer) bits += f;
    CHECK(bits == 784);
  }

  SUBCASE("unknown task id rejected") {
    CHECK_THROWS_AS(parse_task("mnist"), std::invalid_argument);
    CHECK(parse_task("onehot_bottom") == TaskId::onehot_bottom);
  }
}

TEST_CASE("pack_batch matches encode_clamps") {
  Fixture fx(20);
  RawData raw = load_idx(fx.images, fx.labels);
  SeededRng rng(3);
  TaskSpec spec = TaskSpec::make(TaskId::barred);
  TaskData t = build_task(spec, raw, raw, rng, 0);
  std::vector<int> idx{3, 1, 7};
  BatchInput b = pack_batch(t.train, idx, spec, Mode::train);
  CHECK(b.num_samples == 3);
  for (int s = 0; s < 3; ++s) {
    ClampSpec c = encode_clamps(t.train, idx[s], spec, Mode::train);
    for (int j = 0; j < spec.topology.size(0); ++j) CHECK(b.clamp_rows[0](s, j) == c.values[0][j]);
    for (int j = 0; j < spec.topology.size(3); ++j) CHECK(b.clamp_rows[3](s, j) == c.values[3][j]);
  }
}
