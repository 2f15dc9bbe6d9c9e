#include "pcnlab/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pcnlab {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw std::invalid_argument("config: key '" + key + "': expected integer, got '" + v + "'");
  }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw std::invalid_argument("config: key '" + key + "': expected unsigned integer, got '" +
                                v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw std::invalid_argument("config: key '" + key + "': expected number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config: key '" + key + "': expected boolean, got '" + v + "'");
}

}  // namespace

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(to_int("list", item));
  }
  return out;
}

std::vector<uint64_t> parse_u64_list(const std::string& s) {
  std::vector<uint64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(to_u64("list", item));
  }
  return out;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: " + path + ":" + std::to_string(lineno) +
                                  ": expected key=value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void apply_config_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "task") {
    parse_task(value);  // validates
    cfg.task = value;
  } else if (key == "seed") {
    cfg.seed = to_u64(key, value);
  } else if (key == "seeds") {
    cfg.seeds = parse_u64_list(value);
    if (cfg.seeds.empty()) throw std::invalid_argument("config: 'seeds' must be nonempty");
  } else if (key == "epochs") {
    cfg.epochs = to_int(key, value);
  } else if (key == "batch_size") {
    cfg.batch_size = to_int(key, value);
  } else if (key == "node_lr") {
    cfg.node_lr = to_double(key, value);
  } else if (key == "weight_lr") {
    cfg.weight_lr = to_double(key, value);
  } else if (key == "train_iterations") {
    cfg.train_iterations = to_int(key, value);
  } else if (key == "test_iterations_per_epoch") {
    cfg.test_iterations_per_epoch = to_int(key, value);
  } else if (key == "test_subset") {
    cfg.test_subset = to_int(key, value);
  } else if (key == "train_subset") {
    cfg.train_subset = to_int(key, value);
  } else if (key == "noise_top") {
    cfg.noise_top = to_bool(key, value);
  } else if (key == "ablate") {
    cfg.ablation_depths = parse_int_list(value);
  } else if (key == "bar_first_row") {
    cfg.bar_first_row = to_int(key, value);
  } else if (key == "bar_rows") {
    cfg.bar_rows = to_int(key, value);
  } else if (key == "eval_every") {
    cfg.eval_every = to_int(key, value);
  } else if (key == "threads") {
    cfg.threads = to_int(key, value);
  } else if (key == "out") {
    cfg.out_dir = value;
  } else if (key == "data_dir") {
    cfg.data_dir = value;
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

void apply_config(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv) apply_config_key(cfg, k, v);
}

}  // namespace pcnlab
