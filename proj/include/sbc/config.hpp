#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sbc/analysis.hpp"
#include "sbc/sweep.hpp"

namespace sbc {

struct StrategySettings {
  double eta = 0.45;
  int n_max = 120;
};

struct SpectrumSettings {
  double probe_time = 20e-6;       // s
  double detuning_min = 0.0;       // rad/s
  double detuning_max = 0.0;       // rad/s
  std::size_t points = 201;
  Transition transition{TransitionKind::Red, 1};
  std::size_t mode = 0;
  bool cooled = true;  // probe the state after the configured schedule
};

struct RunConfig {
  Scenario scenario;
  std::string output_dir = ".";

  std::string sweep_param;
  std::vector<double> sweep_values;
  std::size_t grid_points = 12;
  unsigned workers = 0;
  bool shared_fit = true;
  bool write_traces = false;
  Objective objective = Objective::MinT0;

  StrategySettings strategy;
  SpectrumSettings spectrum;

  SweepPlan sweep_plan() const;
};

using KeyValues = std::map<std::string, std::string>;

/// Reads `key = value` lines; `#` starts a comment. Throws ConfigError naming
/// the source and line on malformed input or duplicate keys.
KeyValues parse_key_values(std::istream& in, const std::string& source = "config");

/// Applies `key=value` overrides on top of `base`.
void apply_overrides(KeyValues& base, const std::vector<std::string>& overrides);

/// Builds a validated configuration. Unknown keys, keys that do not belong
/// to the selected scenario and unparsable values raise ConfigError naming
/// the key.
RunConfig build_run_config(const KeyValues& entries);

/// parse_key_values on `path` (if given), then overrides, then build.
RunConfig load_run_config(const std::optional<std::string>& path,
                          const std::vector<std::string>& overrides);

/// Every accepted key, for help output.
std::vector<std::string> known_config_keys();

/// Parses "a,b,c" or an inclusive range "start:stop:step".
std::vector<double> parse_value_list(const std::string& text);

}  // namespace sbc
