#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "overtake/baseline_policy.hpp"
#include "overtake/episode.hpp"
#include "overtake/scenario.hpp"

namespace overtake {

/// Every tunable of a run. Loaded from a `key = value` file with dotted keys
/// (`planner.horizon = 50`); a `[section]` line prefixes the keys after it.
struct RunConfig {
  EpisodeConfig episode;
  TrainConfig train;
  BaselineConfig baseline;
  ParameterRanges ranges;
  std::uint64_t seed = 42;
  std::string output_dir = "out";

  void validate() const;
};

/// Error raised for unknown keys, malformed values and failed validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Applies `key = value` (throws ConfigError on unknown key or bad value).
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// All keys in canonical order.
std::vector<std::string> config_keys();
std::string get_config_value(const RunConfig& cfg, const std::string& key);

void parse_config(std::istream& in, RunConfig& cfg);
RunConfig load_config(const std::string& path);

/// Fully resolved configuration, one `key = value` per line.
void write_config(std::ostream& out, const RunConfig& cfg);

}  // namespace overtake
