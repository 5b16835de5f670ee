#include "sbc/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <set>
#include <sstream>

#include "sbc/error.hpp"

namespace sbc {

namespace {

constexpr double kTwoPiMHz = 2.0 * constants::pi * 1e6;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) {
    throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
  }
  return v;
}

long to_integer(const std::string& key, const std::string& text) {
  const double v = to_double(key, text);
  if (v != std::round(v)) throw ConfigError("key '" + key + "': expected an integer, got '" + text + "'");
  return static_cast<long>(v);
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "on") return true;
  if (text == "0" || text == "false" || text == "off") return false;
  throw ConfigError("key '" + key + "': expected 0 or 1, got '" + text + "'");
}

enum class Scope { Any, SingleIon, TwoMode, HighOrder, OneMode };

bool applies(Scope scope, ScenarioKind kind) {
  switch (scope) {
    case Scope::Any: return true;
    case Scope::SingleIon: return kind == ScenarioKind::SingleIon;
    case Scope::TwoMode: return kind == ScenarioKind::TwoMode;
    case Scope::HighOrder: return kind == ScenarioKind::HighOrder;
    case Scope::OneMode: return kind != ScenarioKind::TwoMode;
  }
  return false;
}

struct Key {
  Scope scope;
  // Keys with an earlier stage are applied first; stage 2 keys read the
  // mode parameters set in stage 1.
  int stage;
  std::function<void(RunConfig&, const std::string& key, const std::string& value)> apply;
};

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

Setter number(std::function<void(RunConfig&, double)> f) {
  return [f](RunConfig& c, const std::string& k, const std::string& v) { f(c, to_double(k, v)); };
}

Setter swept(const char* name) {
  return [name](RunConfig& c, const std::string& k, const std::string& v) {
    set_parameter(c.scenario, name, to_double(k, v));
  };
}

Setter initial_nbar(std::size_t mode) {
  return [mode](RunConfig& c, const std::string& k, const std::string& v) {
    c.scenario.initial.at(mode) = ThermalSpec::from_nbar(to_double(k, v));
  };
}

Setter pi_time(std::size_t mode) {
  return [mode](RunConfig& c, const std::string& k, const std::string& v) {
    PhysicsParams& p = c.scenario.physics;
    const double w = calibrate_omega0(to_double(k, v) * 1e-6, c.scenario.modes.at(mode).eta);
    if (c.scenario.kind == ScenarioKind::TwoMode) {
      p.mode_omega0.resize(2, p.omega0);
      p.mode_omega0[mode] = w;
      if (mode == 0) p.omega0 = w;
    } else {
      p.omega0 = w;
    }
  };
}

const std::map<std::string, Key>& key_table() {
  static const std::map<std::string, Key> table = [] {
    std::map<std::string, Key> t;
    t["scenario"] = {Scope::Any, 0, [](RunConfig&, const std::string&, const std::string&) {}};
    t["output_dir"] = {Scope::Any, 1, [](RunConfig& c, const std::string&, const std::string& v) {
                         c.output_dir = v;
                       }};
    t["gamma_eff_per_ms"] = {Scope::Any, 1, number([](RunConfig& c, double v) { c.scenario.physics.gamma_eff = v * 1e3; })};
    t["gamma_background_per_ms"] = {Scope::Any, 1, number([](RunConfig& c, double v) {
                                      c.scenario.physics.gamma_background = v * 1e3;
                                    })};
    t["xi"] = {Scope::Any, 1, number([](RunConfig& c, double v) { c.scenario.physics.xi = v; })};
    t["eta_tilde"] = {Scope::Any, 1, number([](RunConfig& c, double v) { c.scenario.physics.eta_tilde = v; })};
    t["pulse_area_reduction_us"] = {Scope::Any, 1, number([](RunConfig& c, double v) {
                                      c.scenario.physics.pulse_area_reduction = v * 1e-6;
                                    })};
    t["repump_us"] = {Scope::Any, 1, number([](RunConfig& c, double v) { c.scenario.physics.repump_pulse = v * 1e-6; })};
    t["repump_gap_us"] = {Scope::Any, 1, number([](RunConfig& c, double v) { c.scenario.physics.repump_gap = v * 1e-6; })};
    t["rtol"] = {Scope::Any, 1, number([](RunConfig& c, double v) { c.scenario.physics.rtol = v; })};
    t["max_tail"] = {Scope::Any, 1, number([](RunConfig& c, double v) { c.scenario.max_tail = v; })};
    t["quench"] = {Scope::Any, 1, [](RunConfig& c, const std::string& k, const std::string& v) {
                     c.scenario.quench = to_bool(k, v);
                   }};
    t["tc_us"] = {Scope::Any, 1, swept("tc_us")};

    // one-mode scenarios
    t["trap_mhz"] = {Scope::OneMode, 1, number([](RunConfig& c, double v) { c.scenario.modes[0].frequency = v * kTwoPiMHz; })};
    t["eta"] = {Scope::OneMode, 1, number([](RunConfig& c, double v) { c.scenario.modes[0].eta = v; })};
    t["n_max"] = {Scope::OneMode, 1, [](RunConfig& c, const std::string& k, const std::string& v) {
                    c.scenario.modes[0].n_max = static_cast<int>(to_integer(k, v));
                  }};
    t["nbar_initial"] = {Scope::OneMode, 2, initial_nbar(0)};
    t["t_pi_n1_us"] = {Scope::OneMode, 2, pi_time(0)};

    // two-mode
    t["trap_ip_mhz"] = {Scope::TwoMode, 1, number([](RunConfig& c, double v) { c.scenario.modes[0].frequency = v * kTwoPiMHz; })};
    t["trap_op_mhz"] = {Scope::TwoMode, 1, number([](RunConfig& c, double v) { c.scenario.modes[1].frequency = v * kTwoPiMHz; })};
    t["eta_ip"] = {Scope::TwoMode, 1, number([](RunConfig& c, double v) { c.scenario.modes[0].eta = v; })};
    t["eta_op"] = {Scope::TwoMode, 1, number([](RunConfig& c, double v) { c.scenario.modes[1].eta = v; })};
    t["n_max_ip"] = {Scope::TwoMode, 1, [](RunConfig& c, const std::string& k, const std::string& v) {
                       c.scenario.modes[0].n_max = static_cast<int>(to_integer(k, v));
                     }};
    t["n_max_op"] = {Scope::TwoMode, 1, [](RunConfig& c, const std::string& k, const std::string& v) {
                       c.scenario.modes[1].n_max = static_cast<int>(to_integer(k, v));
                     }};
    t["nbar_initial_ip"] = {Scope::TwoMode, 2, initial_nbar(0)};
    t["nbar_initial_op"] = {Scope::TwoMode, 2, initial_nbar(1)};
    t["t_pi_ip_us"] = {Scope::TwoMode, 2, pi_time(0)};
    t["t_pi_op_us"] = {Scope::TwoMode, 2, pi_time(1)};
    t["alpha_prime"] = {Scope::TwoMode, 1, swept("alpha_prime")};
    t["t_ip_us"] = {Scope::TwoMode, 1, swept("t_ip_us")};
    t["t_op_us"] = {Scope::TwoMode, 1, swept("t_op_us")};

    t["temperature_mk"] = {Scope::Any, 1, number([](RunConfig& c, double v) {
                             for (auto& s : c.scenario.initial) s = ThermalSpec::from_temperature(v * 1e-3);
                           })};

    // single ion
    t["alpha"] = {Scope::SingleIon, 1, swept("alpha")};
    t["t_r1_us"] = {Scope::SingleIon, 1, swept("t_r1_us")};
    t["t_r2_us"] = {Scope::SingleIon, 1, swept("t_r2_us")};

    // high order
    t["beta_max"] = {Scope::HighOrder, 1, swept("beta_max")};
    t["t_pulse_us"] = {Scope::HighOrder, 1, swept("t_pulse_us")};

    // sweep
    t["sweep_param"] = {Scope::Any, 1, [](RunConfig& c, const std::string&, const std::string& v) {
                          c.sweep_param = v;
                        }};
    t["sweep_values"] = {Scope::Any, 1, [](RunConfig& c, const std::string& k, const std::string& v) {
                           try {
                             c.sweep_values = parse_value_list(v);
                           } catch (const ConfigError& e) {
                             throw ConfigError("key '" + k + "': " + e.what());
                           }
                         }};
    t["tc_grid_points"] = {Scope::Any, 1, [](RunConfig& c, const std::string& k, const std::string& v) {
                             const long n = to_integer(k, v);
                             if (n < 1) throw ConfigError("key '" + k + "' must be positive");
                             c.grid_points = static_cast<std::size_t>(n);
                           }};
    t["workers"] = {Scope::Any, 1, [](RunConfig& c, const std::string& k, const std::string& v) {
                      const long n = to_integer(k, v);
                      if (n < 0) throw ConfigError("key '" + k + "' must be non-negative");
                      c.workers = static_cast<unsigned>(n);
                    }};
    t["shared_fit"] = {Scope::Any, 1, [](RunConfig& c, const std::string& k, const std::string& v) {
                         c.shared_fit = to_bool(k, v);
                       }};
    t["write_traces"] = {Scope::Any, 1, [](RunConfig& c, const std::string& k, const std::string& v) {
                           c.write_traces = to_bool(k, v);
                         }};
    t["objective"] = {Scope::Any, 1, [](RunConfig& c, const std::string& k, const std::string& v) {
                        if (v == "min_t0") {
                          c.objective = Objective::MinT0;
                        } else if (v == "min_max_per_mode") {
                          c.objective = Objective::MinMaxPerMode;
                        } else {
                          throw ConfigError("key '" + k + "': expected min_t0 or min_max_per_mode");
                        }
                      }};

    // strategy map
    t["map_eta"] = {Scope::Any, 1, number([](RunConfig& c, double v) { c.strategy.eta = v; })};
    t["map_n_max"] = {Scope::Any, 1, [](RunConfig& c, const std::string& k, const std::string& v) {
                        c.strategy.n_max = static_cast<int>(to_integer(k, v));
                      }};

    // spectrum
    t["probe_us"] = {Scope::Any, 1, number([](RunConfig& c, double v) { c.spectrum.probe_time = v * 1e-6; })};
    t["detuning_min_mhz"] = {Scope::Any, 1, number([](RunConfig& c, double v) { c.spectrum.detuning_min = v * kTwoPiMHz; })};
    t["detuning_max_mhz"] = {Scope::Any, 1, number([](RunConfig& c, double v) { c.spectrum.detuning_max = v * kTwoPiMHz; })};
    t["detuning_points"] = {Scope::Any, 1, [](RunConfig& c, const std::string& k, const std::string& v) {
                              const long n = to_integer(k, v);
                              if (n < 1) throw ConfigError("key '" + k + "' must be positive");
                              c.spectrum.points = static_cast<std::size_t>(n);
                            }};
    t["transition"] = {Scope::Any, 1, [](RunConfig& c, const std::string& k, const std::string& v) {
                         if (v == "carrier") {
                           c.spectrum.transition.kind = TransitionKind::Carrier;
                         } else if (v == "red") {
                           c.spectrum.transition.kind = TransitionKind::Red;
                         } else if (v == "blue") {
                           c.spectrum.transition.kind = TransitionKind::Blue;
                         } else {
                           throw ConfigError("key '" + k + "': expected carrier, red or blue");
                         }
                       }};
    t["probe_beta"] = {Scope::Any, 1, [](RunConfig& c, const std::string& k, const std::string& v) {
                         const long b = to_integer(k, v);
                         if (b < 1) throw ConfigError("key '" + k + "' must be at least 1");
                         c.spectrum.transition.beta = static_cast<int>(b);
                       }};
    t["probe_mode"] = {Scope::Any, 1, [](RunConfig& c, const std::string& k, const std::string& v) {
                         const long m = to_integer(k, v);
                         if (m < 0) throw ConfigError("key '" + k + "' must be non-negative");
                         c.spectrum.mode = static_cast<std::size_t>(m);
                       }};
    t["spectrum_state"] = {Scope::Any, 1, [](RunConfig& c, const std::string& k, const std::string& v) {
                             if (v == "cooled") {
                               c.spectrum.cooled = true;
                             } else if (v == "initial") {
                               c.spectrum.cooled = false;
                             } else {
                               throw ConfigError("key '" + k + "': expected cooled or initial");
                             }
                           }};
    return t;
  }();
  return table;
}

}  // namespace

SweepPlan RunConfig::sweep_plan() const {
  SweepPlan plan;
  plan.base = scenario;
  plan.parameter = sweep_param;
  plan.values = sweep_values;
  plan.grid_points = grid_points;
  plan.shared_fit = shared_fit;
  plan.workers = workers;
  plan.keep_traces = write_traces;
  return plan;
}

KeyValues parse_key_values(std::istream& in, const std::string& source) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": missing key");
    if (value.empty()) throw ConfigError(where + ": key '" + key + "' has no value");
    if (!kv.emplace(key, value).second) throw ConfigError(where + ": duplicate key '" + key + "'");
  }
  return kv;
}

void apply_overrides(KeyValues& base, const std::vector<std::string>& overrides) {
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    const std::string key = trim(o.substr(0, eq));
    const std::string value = trim(o.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError("override '" + o + "' is not key=value");
    base[key] = value;
  }
}

RunConfig build_run_config(const KeyValues& entries) {
  const auto& keys = key_table();
  for (const auto& [k, v] : entries) {
    if (!keys.count(k)) throw ConfigError("unknown config key '" + k + "'");
  }
  const ScenarioKind kind =
      entries.count("scenario") ? parse_scenario_kind(entries.at("scenario")) : ScenarioKind::SingleIon;
  RunConfig cfg;
  cfg.scenario = default_scenario(kind);
  cfg.strategy.eta = cfg.scenario.modes[0].eta;
  if (kind == ScenarioKind::TwoMode) cfg.objective = Objective::MinMaxPerMode;

  if (entries.count("temperature_mk") &&
      (entries.count("nbar_initial") || entries.count("nbar_initial_ip") || entries.count("nbar_initial_op"))) {
    // Per-mode nbar keys win over the shared temperature; both only makes
    // sense in two-mode runs.
    if (kind != ScenarioKind::TwoMode) {
      throw ConfigError("key 'temperature_mk' conflicts with 'nbar_initial'");
    }
  }

  for (int stage = 1; stage <= 2; ++stage) {
    for (const auto& [k, v] : entries) {
      const Key& key = keys.at(k);
      if (key.stage != stage) continue;
      if (!applies(key.scope, kind)) {
        throw ConfigError("key '" + k + "' does not apply to scenario " + to_string(kind));
      }
      try {
        key.apply(cfg, k, v);
      } catch (const ConfigError& e) {
        const std::string what = e.what();
        if (what.find("'" + k + "'") != std::string::npos) throw;
        throw ConfigError("key '" + k + "': " + what);
      }
    }
  }
  if (entries.count("eta") && !entries.count("map_eta")) cfg.strategy.eta = cfg.scenario.modes[0].eta;

  cfg.scenario.validate();
  if (cfg.strategy.n_max < 1) throw ConfigError("key 'map_n_max' must be at least 1");
  if (!(cfg.strategy.eta > 0.0)) throw ConfigError("key 'map_eta' must be positive");
  if (!(cfg.spectrum.probe_time > 0.0)) throw ConfigError("key 'probe_us' must be positive");
  if (cfg.spectrum.mode >= cfg.scenario.modes.size()) throw ConfigError("key 'probe_mode' addresses a missing mode");
  if (cfg.spectrum.detuning_min == 0.0 && cfg.spectrum.detuning_max == 0.0) {
    const double w = cfg.scenario.physics.carrier(cfg.spectrum.mode);
    cfg.spectrum.detuning_min = -2.0 * w;
    cfg.spectrum.detuning_max = 2.0 * w;
  }
  if (!(cfg.spectrum.detuning_max >= cfg.spectrum.detuning_min)) {
    throw ConfigError("key 'detuning_max_mhz' must not be below 'detuning_min_mhz'");
  }
  return cfg;
}

RunConfig load_run_config(const std::optional<std::string>& path,
                          const std::vector<std::string>& overrides) {
  KeyValues kv;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config file '" + *path + "'");
    kv = parse_key_values(in, *path);
  }
  apply_overrides(kv, overrides);
  return build_run_config(kv);
}

std::vector<std::string> known_config_keys() {
  std::vector<std::string> names;
  for (const auto& [k, v] : key_table()) names.push_back(k);
  return names;
}

std::vector<double> parse_value_list(const std::string& text) {
  std::vector<double> out;
  const std::string t = trim(text);
  if (t.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(to_double("range", trim(item)));
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
      throw ConfigError("range must be start:stop:step with step > 0");
    }
    const long n = std::lround(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
    for (long i = 0; i <= n; ++i) {
      // Round to 12 significant digits so 0.1-style steps give clean values.
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.12g", parts[0] + static_cast<double>(i) * parts[2]);
      out.push_back(std::stod(buf));
    }
    return out;
  }
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double("list", trim(item)));
  if (out.empty()) throw ConfigError("empty value list");
  return out;
}

}  // namespace sbc
