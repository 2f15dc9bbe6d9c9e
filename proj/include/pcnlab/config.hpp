#pragma once

#include <map>
#include <string>
#include <vector>

#include "pcnlab/experiments.hpp"

namespace pcnlab {

// Flat key=value config files ('#' starts a comment). Keys mirror the CLI
// flags one-to-one; precedence is flags > config file > built-in defaults.

std::map<std::string, std::string> parse_config_file(const std::string& path);

// Applies one key. Unknown keys and malformed values throw
// std::invalid_argument (a usage error at the CLI).
void apply_config_key(ExperimentConfig& cfg, const std::string& key, const std::string& value);

void apply_config(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv);

std::vector<int> parse_int_list(const std::string& s);
std::vector<uint64_t> parse_u64_list(const std::string& s);

}  // namespace pcnlab
