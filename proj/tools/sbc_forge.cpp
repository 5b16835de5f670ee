// sbc-forge: sideband-cooling simulations from the command line.
#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sbc/analysis.hpp"
#include "sbc/config.hpp"
#include "sbc/error.hpp"
#include "sbc/sweep.hpp"

namespace fs = std::filesystem;
using namespace sbc;

namespace {

std::string num(double v, int digits = 6) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::ofstream open_output(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.output_dir);
  const fs::path path = fs::path(cfg.output_dir) / name;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

void write_schedule(const RunConfig& cfg, const PulseSchedule& schedule) {
  open_output(cfg, "schedule.txt") << schedule.to_text();
}

int cmd_simulate(const RunConfig& cfg) {
  const Scenario& s = cfg.scenario;
  const PulseSchedule schedule = s.schedule();
  write_schedule(cfg, schedule);
  const RabiTable table(s.modes);
  const CoolingTrace trace = run_trajectory(schedule, s.initial_state(), s.physics, table);
  {
    auto out = open_output(cfg, "trace.csv");
    write_trace_csv(out, trace);
  }
  const TraceSample& last = trace.samples.back();
  std::cout << "scenario: " << to_string(s.kind) << '\n'
            << "pulses: " << schedule.pulse_count() << '\n'
            << "T_c_us: " << format_microseconds(schedule.cooling_time()) << '\n'
            << "T_total_us: " << format_microseconds(schedule.total_time()) << '\n';
  for (std::size_t k = 0; k < last.p0.size(); ++k) {
    std::cout << "mode " << k << ": final_nbar=" << num(last.nbar[k]) << " P0=" << num(last.p0[k])
              << '\n';
  }
  return 0;
}

std::string value_tag(double v) { return num(v, 10); }

int cmd_sweep(const RunConfig& cfg) {
  if (cfg.sweep_param.empty()) throw ConfigError("key 'sweep_param' is required for sweep");
  if (cfg.sweep_values.empty()) throw ConfigError("key 'sweep_values' is required for sweep");
  const SweepResult result = run_sweep(cfg.sweep_plan());
  {
    auto out = open_output(cfg, "sweep.csv");
    write_sweep_csv(out, result);
  }
  if (cfg.write_traces) {
    for (const SweepPoint& p : result.points) {
      if (!p.trace) continue;
      auto out = open_output(cfg, "trace_" + value_tag(p.value) + ".csv");
      write_trace_csv(out, *p.trace);
    }
  }
  for (const SweepPoint& p : result.points) {
    std::cout << cfg.sweep_param << '=' << value_tag(p.value) << ' ' << to_string(p.status);
    if (p.status == PointStatus::Ok) {
      for (std::size_t k = 0; k < p.fits.size(); ++k) {
        std::cout << " T0_us[" << k << "]=" << num(p.fits[k].t0 * 1e6, 4);
      }
    } else {
      std::cout << " (" << p.message << ')';
    }
    std::cout << '\n';
  }
  const Optimum opt = find_optimum(result, cfg.objective);
  Scenario best = cfg.scenario;
  set_parameter(best, cfg.sweep_param, opt.value);
  write_schedule(cfg, best.schedule());
  std::cout << "optimum: " << cfg.sweep_param << '=' << value_tag(opt.value)
            << " T0_us=" << num(opt.objective * 1e6, 4) << '\n';
  return 0;
}

int cmd_strategy_map(const RunConfig& cfg) {
  const auto rows = sideband_efficiency_map(cfg.strategy.eta, cfg.strategy.n_max);
  {
    auto out = open_output(cfg, "strategy_map.csv");
    out << "n,best_beta,efficiency\n";
    for (const StrategyRow& r : rows) out << r.n << ',' << r.best_beta << ',' << num(r.efficiency, 10) << '\n';
  }
  const auto bands = strategy_bands(rows);
  {
    auto out = open_output(cfg, "strategy_bands.csv");
    out << "beta,n_first,n_last\n";
    for (const Band& b : bands) out << b.beta << ',' << b.n_first << ',' << b.n_last << '\n';
  }
  int max_beta = 0;
  for (const Band& b : bands) {
    std::cout << "beta=" << b.beta << " n=" << b.n_first << ".." << b.n_last << '\n';
    max_beta = std::max(max_beta, b.beta);
  }
  std::cout << "max_beta=" << max_beta << '\n';
  return 0;
}

int cmd_spectrum(const RunConfig& cfg) {
  const Scenario& s = cfg.scenario;
  const RabiTable table(s.modes);
  MotionalState state = s.initial_state();
  if (cfg.spectrum.cooled) {
    const PulseSchedule schedule = s.schedule();
    write_schedule(cfg, schedule);
    MotionalState st = state;
    for (const Event& ev : schedule.events()) {
      if (const auto* p = std::get_if<RsbPulse>(&ev)) {
        st = evolve_rsb_pulse(st, p->mode, p->beta, to_seconds(p->duration), s.physics, table, p->quench);
      } else if (std::holds_alternative<Repump>(ev)) {
        st = apply_repump(st);
      }
    }
    state = std::move(st);
  }
  const SpectrumSettings& sp = cfg.spectrum;
  std::vector<double> detunings;
  for (std::size_t i = 0; i < sp.points; ++i) {
    const double f = sp.points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(sp.points - 1);
    detunings.push_back(sp.detuning_min + f * (sp.detuning_max - sp.detuning_min));
  }
  const auto p = simulate_sideband_spectrum(state, sp.probe_time, detunings, sp.transition, table,
                                            s.physics.carrier(sp.mode), sp.mode);
  {
    auto out = open_output(cfg, "spectrum.csv");
    out << "detuning_mhz,P_exc\n";
    for (std::size_t i = 0; i < p.size(); ++i) {
      out << num(detunings[i] / (2.0 * constants::pi * 1e6), 10) << ',' << num(p[i], 10) << '\n';
    }
  }
  const auto peak = std::max_element(p.begin(), p.end()) - p.begin();
  std::cout << "nbar: " << num(mean_occupation(state, sp.mode)) << '\n'
            << "peak: detuning_mhz=" << num(detunings[static_cast<std::size_t>(peak)] / (2.0 * constants::pi * 1e6))
            << " P_exc=" << num(p[static_cast<std::size_t>(peak)]) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resolved-sideband cooling simulator"};
  app.require_subcommand(1);
  std::optional<std::string> config_path;
  std::vector<std::string> overrides;

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&);
  };
  const Command commands[] = {
      {"simulate", "Run one cooling sequence and write its trace", cmd_simulate},
      {"sweep", "Sweep one parameter and fit the cooling time constant", cmd_sweep},
      {"strategy-map", "Best sideband order per motional level", cmd_strategy_map},
      {"spectrum", "Sideband excitation spectrum of the initial or cooled state", cmd_spectrum},
  };
  std::vector<CLI::App*> subs;
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config,-c", config_path, "Key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--set,-s", overrides, "Override a configuration key (key=value)");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const RunConfig cfg = load_run_config(config_path, overrides);
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) return commands[i].run(cfg);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
