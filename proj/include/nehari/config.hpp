// Flat key = value run configuration ('#' comments, UTF-8); unknown keys are
// rejected by name.  All physical parameters are echoed into output headers.

#pragma once

#include "nehari/geodesic.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace nehari::cli {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct RunConfig {
  geodesic::GeodesicConfig geo;
  std::string out_dir = "out";
  std::string log = "info";  // quiet | info | debug
  std::string sweep_axis;    // winding | p | k_max (sweep command only)
  std::vector<std::string> sweep_values;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Apply one "key = value" assignment (shared by the file parser and the
// solution-header loader).  Unknown keys throw ConfigError naming the key.
void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value);

// Ordered physical-parameter echo for output headers.
std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& cfg);

std::string format_double(double v);  // 17 significant digits, round-trip exact
std::string format_winding(const Eigen::VectorXi& w);
Eigen::VectorXi parse_winding(const std::string& text);

}  // namespace nehari::cli
