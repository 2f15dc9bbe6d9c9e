#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pcnlab/engine.hpp"
#include "pcnlab/network.hpp"
#include "pcnlab/numerics.hpp"

namespace pcnlab {

inline constexpr int kImageSide = 28;
inline constexpr int kImagePixels = kImageSide * kImageSide;

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 28x28 image, values in [0,1]
struct Image {
  std::array<double, kImagePixels> px{};
  double& at(int row, int col) { return px[row * kImageSide + col]; }
  double at(int row, int col) const { return px[row * kImageSide + col]; }
};

// Raw MNIST-style data as loaded from IDX files; pixels stay bytes until
// clamp encoding (byte/255 is exactly invertible, so nothing is lost).
struct RawData {
  std::vector<uint8_t> pixels;  // count * 784
  std::vector<uint8_t> labels;  // count
  int count = 0;

  const uint8_t* image(int i) const { return pixels.data() + static_cast<size_t>(i) * kImagePixels; }
};

// IDX container (big-endian): magic 2051 for images, 2049 for labels.
RawData load_idx(const std::string& images_path, const std::string& labels_path);

// White horizontal bar across the middle: `rows` rows starting at
// `first_row` set to 1.0.
Image apply_bar(const Image& img, int first_row = 13, int rows = 2);

enum class TaskId { digit1, groups, barred, onehot_bottom };

const char* task_name(TaskId id);
TaskId parse_task(const std::string& name);  // throws std::invalid_argument

enum class Mode { train, test };

struct TaskSpec {
  TaskId id = TaskId::digit1;
  int num_classes = 10;
  NetworkTopology topology;
  bool noise_top = false;  // training control: top clamp values drawn N(0.5,0.05)
  int bar_first_row = 13;
  int bar_rows = 2;

  // readout positions, all in the bottom layer except the label
  bool label_at_top() const { return id != TaskId::onehot_bottom; }
  int action_begin() const { return kImagePixels; }
  int action_count() const { return id == TaskId::onehot_bottom ? 10 : 1; }

  static TaskSpec make(TaskId id);
};

// One task example: pixels (bar already applied where relevant), the task
// label, and the ground-truth action.
struct Dataset {
  std::vector<uint8_t> pixels;   // count * 784
  std::vector<int16_t> labels;   // task labels (digit, or digit+10 when barred)
  std::vector<uint8_t> actions;  // digit1/groups/barred: 0/1; onehot_bottom: class id
  int count = 0;

  const uint8_t* image(int i) const { return pixels.data() + static_cast<size_t>(i) * kImagePixels; }
};

struct TaskData {
  TaskSpec spec;
  Dataset train;
  Dataset test;
};

// Applies the task's labelling/augmentation rules to the raw sets. The test
// set is first subsampled to test_subset examples (without replacement) so
// that every evaluation of this run shares the same examples. For `barred`,
// exactly half of each set (by shuffled index) gets the bar.
TaskData build_task(const TaskSpec& spec, const RawData& raw_train, const RawData& raw_test,
                    SeededRng& rng, int test_subset);

// Shuffled index batches; the final short batch is kept.
std::vector<std::vector<int>> batches(int count, int batch_size, SeededRng& rng);

// Per-layer clamp values + mask for one example in the given mode.
// Train: top = one-hot label (or noise draws from rng when noise_top) and the
// whole bottom layer clamped. Test: only the 784 pixels clamped.
// onehot_bottom: no top clamp; train clamps all 794 bottom nodes.
ClampSpec encode_clamps(const Dataset& data, int index, const TaskSpec& spec, Mode mode,
                        SeededRng* noise_rng = nullptr);

// The mask for (task, mode); identical for every example of the task.
ClampMask task_mask(const TaskSpec& spec, Mode mode);

// Packs examples[indices] into the engine's batch layout.
BatchInput pack_batch(const Dataset& data, const std::vector<int>& indices,
                      const TaskSpec& spec, Mode mode, SeededRng* noise_rng = nullptr);

}  // namespace pcnlab
