#include "pcnlab/data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace pcnlab {

namespace {

uint32_t read_be32(std::ifstream& f, const std::string& path, size_t offset) {
  unsigned char buf[4];
  f.read(reinterpret_cast<char*>(buf), 4);
  if (!f)
    throw ParseError(path + ": truncated at offset " + std::to_string(offset) +
                     " (expected 4 more bytes)");
  return (uint32_t(buf[0]) << 24) | (uint32_t(buf[1]) << 16) | (uint32_t(buf[2]) << 8) |
         uint32_t(buf[3]);
}

void expect_magic(uint32_t got, uint32_t want, const std::string& path) {
  if (got != want)
    throw ParseError(path + ": bad magic at offset 0: got " + std::to_string(got) +
                     ", expected " + std::to_string(want));
}

}  // namespace

RawData load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream imgf(images_path, std::ios::binary);
  if (!imgf) throw ParseError(images_path + ": cannot open");
  expect_magic(read_be32(imgf, images_path, 0), 2051, images_path);
  uint32_t count = read_be32(imgf, images_path, 4);
  uint32_t rows = read_be32(imgf, images_path, 8);
  uint32_t cols = read_be32(imgf, images_path, 12);
  if (rows != kImageSide || cols != kImageSide)
    throw ParseError(images_path + ": expected 28x28 images, got " + std::to_string(rows) + "x" +
                     std::to_string(cols));

  RawData out;
  out.count = static_cast<int>(count);
  out.pixels.resize(static_cast<size_t>(count) * kImagePixels);
  imgf.read(reinterpret_cast<char*>(out.pixels.data()), out.pixels.size());
  if (imgf.gcount() != static_cast<std::streamsize>(out.pixels.size()))
    throw ParseError(images_path + ": truncated pixel data (got " +
                     std::to_string(imgf.gcount()) + " of " + std::to_string(out.pixels.size()) +
                     " bytes)");

  std::ifstream labf(labels_path, std::ios::binary);
  if (!labf) throw ParseError(labels_path + ": cannot open");
  expect_magic(read_be32(labf, labels_path, 0), 2049, labels_path);
  uint32_t lcount = read_be32(labf, labels_path, 4);
  if (lcount != count)
    throw ParseError(labels_path + ": label count " + std::to_string(lcount) +
                     " != image count " + std::to_string(count));
  out.labels.resize(count);
  labf.read(reinterpret_cast<char*>(out.labels.data()), count);
  if (labf.gcount() != static_cast<std::streamsize>(count))
    throw ParseError(labels_path + ": truncated label data");
  return out;
}

Image apply_bar(const Image& img, int first_row, int rows) {
  Image out = img;
  for (int r = first_row; r < first_row + rows; ++r)
    for (int c = 0; c < kImageSide; ++c) out.at(r, c) = 1.0;
  return out;
}

const char* task_name(TaskId id) {
  switch (id) {
    case TaskId::digit1: return "digit1";
    case TaskId::groups: return "groups";
    case TaskId::barred: return "barred";
    case TaskId::onehot_bottom: return "onehot_bottom";
  }
  return "?";
}

TaskId parse_task(const std::string& name) {
  if (name == "digit1") return TaskId::digit1;
  if (name == "groups") return TaskId::groups;
  if (name == "barred") return TaskId::barred;
  if (name == "onehot_bottom") return TaskId::onehot_bottom;
  throw std::invalid_argument("unknown task id: '" + name +
                              "' (expected digit1|groups|barred|onehot_bottom)");
}

TaskSpec TaskSpec::make(TaskId id) {
  TaskSpec s;
  s.id = id;
  switch (id) {
    case TaskId::digit1:
    case TaskId::groups:
      s.num_classes = 10;
      s.topology = NetworkTopology({10, 100, 300, 785});
      break;
    case TaskId::barred:
      s.num_classes = 20;
      s.topology = NetworkTopology({20, 100, 300, 785});
      break;
    case TaskId::onehot_bottom:
      s.num_classes = 10;
      s.topology = NetworkTopology({10, 25, 50, 100, 200, 300, 794});
      break;
  }
  return s;
}

namespace {

void bar_bytes(uint8_t* image, int first_row, int rows) {
  for (int r = first_row; r < first_row + rows; ++r)
    for (int c = 0; c < kImageSide; ++c) image[r * kImageSide + c] = 255;
}

Dataset make_split(const TaskSpec& spec, const RawData& raw, const std::vector<int>& indices,
                   SeededRng& rng) {
  Dataset d;
  d.count = static_cast<int>(indices.size());
  d.pixels.resize(static_cast<size_t>(d.count) * kImagePixels);
  d.labels.resize(d.count);
  d.actions.resize(d.count);
  for (int i = 0; i < d.count; ++i) {
    const uint8_t* src = raw.image(indices[i]);
    std::copy(src, src + kImagePixels, d.pixels.begin() + static_cast<size_t>(i) * kImagePixels);
    int digit = raw.labels[indices[i]];
    d.labels[i] = static_cast<int16_t>(digit);
    switch (spec.id) {
      case TaskId::digit1: d.actions[i] = digit == 1 ? 1 : 0; break;
      case TaskId::groups: d.actions[i] = digit < 5 ? 1 : 0; break;
      case TaskId::barred: d.actions[i] = 0; break;  // assigned below
      case TaskId::onehot_bottom: d.actions[i] = static_cast<uint8_t>(digit); break;
    }
  }
  if (spec.id == TaskId::barred) {
    // exactly half (rounded down), chosen by shuffled index
    std::vector<int> order(d.count);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (int k = 0; k < d.count / 2; ++k) {
      int i = order[k];
      bar_bytes(d.pixels.data() + static_cast<size_t>(i) * kImagePixels, spec.bar_first_row,
                spec.bar_rows);
      d.labels[i] = static_cast<int16_t>(d.labels[i] + 10);
      d.actions[i] = 1;
    }
  }
  return d;
}

}  // namespace

TaskData build_task(const TaskSpec& spec, const RawData& raw_train, const RawData& raw_test,
                    SeededRng& rng, int test_subset) {
  TaskData t;
  t.spec = spec;

  std::vector<int> train_idx(raw_train.count);
  std::iota(train_idx.begin(), train_idx.end(), 0);

  std::vector<int> test_idx(raw_test.count);
  std::iota(test_idx.begin(), test_idx.end(), 0);
  if (test_subset > 0 && test_subset < raw_test.count) {
    SeededRng subset_rng = rng.derive("test-subset");
    subset_rng.shuffle(test_idx);
    test_idx.resize(test_subset);
  }

  // independent streams so the test selection cannot shift the training
  // set's augmentation draws
  SeededRng train_rng = rng.derive("train-aug");
  SeededRng test_rng = rng.derive("test-aug");
  t.train = make_split(spec, raw_train, train_idx, train_rng);
  t.test = make_split(spec, raw_test, test_idx, test_rng);
  return t;
}

std::vector<std::vector<int>> batches(int count, int batch_size, SeededRng& rng) {
  if (batch_size < 1) throw std::invalid_argument("batches: batch_size must be >= 1");
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<std::vector<int>> out;
  for (int start = 0; start < count; start += batch_size) {
    int end = std::min(count, start + batch_size);
    out.emplace_back(order.begin() + start, order.begin() + end);
  }
  return out;
}

ClampMask task_mask(const TaskSpec& spec, Mode mode) {
  ClampMask m = ClampMask::none(spec.topology);
  int L = spec.topology.num_layers();
  if (mode == Mode::train) {
    if (spec.label_at_top()) std::fill(m.fixed[0].begin(), m.fixed[0].end(), 1);
    std::fill(m.fixed[L - 1].begin(), m.fixed[L - 1].end(), 1);
  } else {
    for (int j = 0; j < kImagePixels; ++j) m.fixed[L - 1][j] = 1;
  }
  return m;
}

ClampSpec encode_clamps(const Dataset& data, int index, const TaskSpec& spec, Mode mode,
                        SeededRng* noise_rng) {
  ClampSpec c;
  c.mask = task_mask(spec, mode);
  int L = spec.topology.num_layers();
  c.values.resize(L);
  for (int n = 0; n < L; ++n) c.values[n].assign(spec.topology.size(n), 0.0);

  const uint8_t* px = data.image(index);
  Vector& bottom = c.values[L - 1];
  for (int j = 0; j < kImagePixels; ++j) bottom[j] = px[j] / 255.0;

  if (mode == Mode::train) {
    if (spec.label_at_top()) {
      if (spec.noise_top) {
        if (!noise_rng)
          throw std::invalid_argument("encode_clamps: noise_top task needs a noise rng");
        for (double& v : c.values[0]) v = noise_rng->normal(0.5, 0.05);
      } else {
        c.values[0][data.labels[index]] = 1.0;
      }
      bottom[spec.action_begin()] = data.actions[index];
    } else {
      // one-hot action group at the bottom
      bottom[spec.action_begin() + data.actions[index]] = 1.0;
    }
  }
  return c;
}

BatchInput pack_batch(const Dataset& data, const std::vector<int>& indices, const TaskSpec& spec,
                      Mode mode, SeededRng* noise_rng) {
  BatchInput b;
  b.mask = task_mask(spec, mode);
  b.num_samples = static_cast<int>(indices.size());
  int L = spec.topology.num_layers();
  b.clamp_rows.resize(L);
  for (int n = 0; n < L; ++n) {
    bool has_fixed = std::any_of(b.mask.fixed[n].begin(), b.mask.fixed[n].end(),
                                 [](uint8_t f) { return f != 0; });
    if (has_fixed) b.clamp_rows[n] = Matrix(b.num_samples, spec.topology.size(n));
  }
  for (int s = 0; s < b.num_samples; ++s) {
    ClampSpec c = encode_clamps(data, indices[s], spec, mode, noise_rng);
    for (int n = 0; n < L; ++n)
      if (b.clamp_rows[n].rows > 0)
        std::copy(c.values[n].begin(), c.values[n].end(), b.clamp_rows[n].row(s));
  }
  return b;
}

}  // namespace pcnlab
