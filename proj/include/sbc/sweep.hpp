#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sbc/analysis.hpp"
#include "sbc/bloch.hpp"
#include "sbc/fock.hpp"
#include "sbc/schedule.hpp"

namespace sbc {

enum class ScenarioKind { SingleIon, TwoMode, HighOrder };

std::string to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(const std::string& name);

// Everything needed to build and run a cooling sequence of one kind.
struct Scenario {
  ScenarioKind kind = ScenarioKind::SingleIon;
  PhysicsParams physics;
  std::vector<TrapMode> modes;
  std::vector<ThermalSpec> initial;  // one per mode
  double max_tail = 0.01;
  Duration cooling_time{};
  bool quench = true;

  // single ion
  double alpha = 0.5;
  Duration t_r1 = from_microseconds(10);
  Duration t_r2 = from_microseconds(10);
  // two mode (mode 0 = ip, mode 1 = op)
  double alpha_prime = 0.5;
  Duration t_ip = from_microseconds(15);
  Duration t_op = from_microseconds(20);
  // high order
  int beta_max = 8;
  Duration t_pulse = from_microseconds(10);

  RepumpTiming repump_timing() const;
  PulseSchedule schedule(Duration cooling) const;
  PulseSchedule schedule() const { return schedule(cooling_time); }
  Duration longest_pulse() const;
  MotionalState initial_state() const;
  void validate() const;
};

/// Carrier Rabi frequency giving a first-order red-sideband pi-time `t_pi`
/// on |n=1> for Lamb-Dicke parameter `eta`.
double calibrate_omega0(double t_pi, double eta);

/// Single 25Mg+ ion: eta 0.3, nbar 10, pi-time 16 us, T_c 500 us.
Scenario single_ion_scenario();
/// Two-ion crystal, ip 2.21 MHz / eta 0.21, op 3.85 MHz / eta 0.16, 1 mK,
/// pi-times 21 / 26.5 us, T_c 2.4 ms.
Scenario two_mode_scenario();
/// Single ion at 1 MHz, eta 0.45, 1 mK, 180 levels, T_c 2 ms.
Scenario high_order_scenario();
Scenario default_scenario(ScenarioKind kind);

/// Names accepted as swept parameters.
const std::vector<std::string>& sweepable_parameters();
/// Sets a swept parameter by name (times in us, rates in 1/ms).
/// Throws ConfigError on an unknown name or invalid value.
void set_parameter(Scenario& scenario, const std::string& name, double value);

/// Executes `schedule`, recording one sample at t = 0 and one after every
/// repump. PhysicsError messages carry the offending pulse index.
CoolingTrace run_trajectory(const PulseSchedule& schedule, const MotionalState& initial,
                            const PhysicsParams& params, const RabiTable& table);

/// `points` log-spaced cooling times from max(tc / 50, shortest_allowed) to tc.
std::vector<Duration> cooling_time_grid(Duration tc, Duration shortest_allowed,
                                        std::size_t points = 12);

struct SweepPlan {
  Scenario base;
  std::string parameter;
  std::vector<double> values;
  std::size_t grid_points = 12;
  bool shared_fit = true;
  unsigned workers = 0;  // 0: hardware concurrency
  bool keep_traces = false;
  // If set, plan validation requires the cooling-time grid to reach 7x it.
  std::optional<double> expected_t0;

  void validate() const;
};

enum class PointStatus { Ok, FitFailed, SimFailed, ScheduleFailed };
std::string to_string(PointStatus status);

struct SweepPoint {
  double value = 0.0;
  PointStatus status = PointStatus::Ok;
  std::string message;
  std::vector<double> cooling_times;   // s
  std::vector<std::vector<double>> p0;  // [mode][grid point], final P0
  std::vector<CoolingFit> fits;         // per mode, valid when Ok
  std::optional<CoolingTrace> trace;    // longest grid point
};

struct SweepResult {
  ScenarioKind kind = ScenarioKind::SingleIon;
  std::string parameter;
  std::size_t mode_count = 1;
  std::vector<SweepPoint> points;
};

SweepResult run_sweep(const SweepPlan& plan);

enum class Objective { MinT0, MinMaxPerMode };

struct Optimum {
  std::size_t index = 0;
  double value = 0.0;
  std::vector<CoolingFit> fits;
  double objective = 0.0;  // s
};

/// Argmin over successful points (first on ties). Throws FitError if none.
Optimum find_optimum(const SweepResult& result, Objective objective);

/// swept_param,value,mode,nbar_i,nbar_f,T0_us,residual,status
void write_sweep_csv(std::ostream& os, const SweepResult& result);
/// t_us,t_total_us,mode,P0,nbar
void write_trace_csv(std::ostream& os, const CoolingTrace& trace);

}  // namespace sbc
