#ifndef SLIPNAV_CONFIG_HPP_
#define SLIPNAV_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "slipnav/pipeline.hpp"
#include "slipnav/sim.hpp"

namespace slipnav {

using KeyValueMap = std::map<std::string, std::string>;

struct SimOptions {
  std::string terrain = "rough";
  double distance = 150.0;  // m
  std::uint64_t seed = 1;
  SensorErrorModel sensor;
};

struct RunConfig {
  PipelineConfig pipeline;
  SimOptions sim;
};

/// Flat `key = value` text; '#' starts a comment. Errors name source and line.
KeyValueMap parse_key_values(const std::string& text, const std::string& source);
KeyValueMap read_key_value_file(const std::string& path);
void write_key_value_file(const std::string& path, const KeyValueMap& values);

/// Applies known keys; unknown keys raise InputError unless `ignore_unknown`.
void apply_config(const KeyValueMap& values, RunConfig& config, bool ignore_unknown = false);

/// Every configurable value, formatted so that apply_config() restores it exactly.
KeyValueMap config_to_map(const RunConfig& config);

std::vector<std::string> config_keys();

}  // namespace slipnav

#endif  // SLIPNAV_CONFIG_HPP_
