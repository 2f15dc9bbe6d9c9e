#include "pcnlab/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace pcnlab {

namespace {

constexpr char kMagic[8] = {'P', 'C', 'N', 'L', 'A', 'B', 'C', 'K'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::ifstream& f, const std::string& path) {
  T v;
  f.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!f) throw CheckpointError(path + ": truncated");
  return v;
}

void put_doubles(std::ofstream& f, const double* p, size_t n) {
  f.write(reinterpret_cast<const char*>(p), n * sizeof(double));
}

void get_doubles(std::ifstream& f, double* p, size_t n, const std::string& path) {
  f.read(reinterpret_cast<char*>(p), n * sizeof(double));
  if (!f) throw CheckpointError(path + ": truncated tensor data");
}

void put_adam(std::ofstream& f, const AdamState& a) {
  put<int64_t>(f, a.step);
  put_doubles(f, a.m.data(), a.m.size());
  put_doubles(f, a.v.data(), a.v.size());
}

void get_adam(std::ifstream& f, AdamState& a, size_t n, const std::string& path) {
  a = AdamState(n);
  a.step = get<int64_t>(f, path);
  get_doubles(f, a.m.data(), n, path);
  get_doubles(f, a.v.data(), n, path);
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError(tmp + ": cannot open for writing");
    f.write(kMagic, sizeof(kMagic));
    put<uint32_t>(f, kVersion);
    put<uint32_t>(f, static_cast<uint32_t>(ck.task.size()));
    f.write(ck.task.data(), ck.task.size());
    put<uint8_t>(f, ck.noise_top ? 1 : 0);
    put<uint64_t>(f, ck.seed);
    put<int32_t>(f, ck.epoch);
    put<uint64_t>(f, ck.config_hash);
    int L = ck.params.topology.num_layers();
    put<int32_t>(f, L);
    for (int n = 0; n < L; ++n) put<int32_t>(f, ck.params.topology.size(n));
    for (int n = 0; n < L - 1; ++n) {
      put_doubles(f, ck.params.weights[n].data.data(), ck.params.weights[n].size());
      put_doubles(f, ck.params.biases[n].data(), ck.params.biases[n].size());
      put_adam(f, ck.adam.weights[n]);
      put_adam(f, ck.adam.biases[n]);
    }
    if (!f) throw CheckpointError(tmp + ": write failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw CheckpointError(path + ": rename from temp failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError(path + ": cannot open");
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError(path + ": not a pcnlab checkpoint (bad magic)");
  uint32_t version = get<uint32_t>(f, path);
  if (version != kVersion)
    throw CheckpointError(path + ": unsupported checkpoint version " + std::to_string(version));

  Checkpoint ck;
  uint32_t task_len = get<uint32_t>(f, path);
  if (task_len > 64) throw CheckpointError(path + ": implausible task name length");
  ck.task.resize(task_len);
  f.read(ck.task.data(), task_len);
  if (!f) throw CheckpointError(path + ": truncated");
  ck.noise_top = get<uint8_t>(f, path) != 0;
  ck.seed = get<uint64_t>(f, path);
  ck.epoch = get<int32_t>(f, path);
  ck.config_hash = get<uint64_t>(f, path);

  int L = get<int32_t>(f, path);
  if (L < 2 || L > 64) throw CheckpointError(path + ": implausible layer count");
  std::vector<int> sizes(L);
  for (int n = 0; n < L; ++n) sizes[n] = get<int32_t>(f, path);
  ck.params.topology = NetworkTopology(sizes);
  for (int n = 0; n < L - 1; ++n) {
    Matrix w(sizes[n + 1], sizes[n]);
    get_doubles(f, w.data.data(), w.size(), path);
    ck.params.weights.push_back(std::move(w));
    Vector b(sizes[n + 1]);
    get_doubles(f, b.data(), b.size(), path);
    ck.params.biases.push_back(std::move(b));
    AdamState aw, ab;
    get_adam(f, aw, static_cast<size_t>(sizes[n + 1]) * sizes[n], path);
    get_adam(f, ab, sizes[n + 1], path);
    ck.adam.weights.push_back(std::move(aw));
    ck.adam.biases.push_back(std::move(ab));
  }
  return ck;
}

}  // namespace pcnlab
