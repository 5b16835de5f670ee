#include "sbc/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>
#include <type_traits>

#include "sbc/error.hpp"

namespace sbc {

namespace {

constexpr double kTwoPiMHz = 2.0 * constants::pi * 1e6;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::SingleIon: return "single_ion";
    case ScenarioKind::TwoMode: return "two_mode";
    case ScenarioKind::HighOrder: return "high_order";
  }
  return "?";
}

ScenarioKind parse_scenario_kind(const std::string& name) {
  for (ScenarioKind k : {ScenarioKind::SingleIon, ScenarioKind::TwoMode, ScenarioKind::HighOrder}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown scenario '" + name + "' (single_ion, two_mode, high_order)");
}

double calibrate_omega0(double t_pi, double eta) {
  if (!(t_pi > 0.0)) throw ConfigError("pi-time must be positive");
  return constants::pi / (t_pi * std::abs(rabi_frequency(1, 0, eta, 1.0)));
}

Scenario single_ion_scenario() {
  Scenario s;
  s.kind = ScenarioKind::SingleIon;
  s.modes = {TrapMode{2.21 * kTwoPiMHz, 0.30, 80}};
  s.initial = {ThermalSpec::from_nbar(10.0)};
  s.physics.omega0 = calibrate_omega0(16e-6, 0.30);
  s.cooling_time = from_microseconds(500);
  return s;
}

Scenario two_mode_scenario() {
  Scenario s;
  s.kind = ScenarioKind::TwoMode;
  s.modes = {TrapMode{2.21 * kTwoPiMHz, 0.21, 60}, TrapMode{3.85 * kTwoPiMHz, 0.16, 40}};
  s.initial = {ThermalSpec::from_temperature(1e-3), ThermalSpec::from_temperature(1e-3)};
  s.physics.mode_omega0 = {calibrate_omega0(21e-6, 0.21), calibrate_omega0(26.5e-6, 0.16)};
  s.physics.omega0 = s.physics.mode_omega0[0];
  s.cooling_time = from_microseconds(2400);
  return s;
}

Scenario high_order_scenario() {
  Scenario s;
  s.kind = ScenarioKind::HighOrder;
  s.modes = {TrapMode{1.0 * kTwoPiMHz, 0.45, 180}};
  s.initial = {ThermalSpec::from_temperature(1e-3)};
  // Same laser setup as the single-ion scenario: carrier fixed by the
  // eta = 0.3 calibration.
  s.physics.omega0 = calibrate_omega0(16e-6, 0.30);
  s.cooling_time = from_microseconds(2000);
  return s;
}

Scenario default_scenario(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::SingleIon: return single_ion_scenario();
    case ScenarioKind::TwoMode: return two_mode_scenario();
    case ScenarioKind::HighOrder: return high_order_scenario();
  }
  throw ConfigError("unknown scenario");
}

RepumpTiming Scenario::repump_timing() const {
  return {from_microseconds(physics.repump_pulse * 1e6), from_microseconds(physics.repump_gap * 1e6)};
}

PulseSchedule Scenario::schedule(Duration cooling) const {
  switch (kind) {
    case ScenarioKind::SingleIon:
      return build_single_ion_schedule(cooling, alpha, t_r2, t_r1, repump_timing(), quench);
    case ScenarioKind::TwoMode:
      return build_two_mode_schedule(cooling, alpha_prime, t_ip, t_op, repump_timing(), quench);
    case ScenarioKind::HighOrder:
      return build_high_order_schedule(cooling, beta_max, t_pulse, repump_timing(), quench);
  }
  throw ConfigError("unknown scenario");
}

Duration Scenario::longest_pulse() const {
  switch (kind) {
    case ScenarioKind::SingleIon: return std::max(t_r1, t_r2);
    case ScenarioKind::TwoMode: return std::max(t_ip, t_op);
    case ScenarioKind::HighOrder: return t_pulse;
  }
  return Duration::zero();
}

MotionalState Scenario::initial_state() const {
  std::vector<std::vector<double>> marginals;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    marginals.push_back(thermal_distribution(initial.at(k).nbar(modes[k]), modes[k].n_max, max_tail).p);
  }
  return MotionalState::product(marginals);
}

void Scenario::validate() const {
  const std::size_t want = kind == ScenarioKind::TwoMode ? 2 : 1;
  if (modes.size() != want) {
    throw ConfigError("scenario " + to_string(kind) + " needs " + std::to_string(want) + " mode(s)");
  }
  if (initial.size() != modes.size()) throw ConfigError("one initial thermal state per mode required");
  for (const TrapMode& m : modes) m.validate();
  physics.validate();
  if (cooling_time < Duration::zero()) throw ConfigError("cooling time must be non-negative");
  if (!(max_tail > 0.0 && max_tail < 1.0)) throw ConfigError("max_tail must lie in (0, 1)");
  if (kind == ScenarioKind::HighOrder && beta_max > modes[0].n_max) {
    throw ConfigError("beta_max exceeds n_max");
  }
}

const std::vector<std::string>& sweepable_parameters() {
  static const std::vector<std::string> names = {
      "t_r1_us", "t_r2_us",  "alpha",      "alpha_prime",      "t_ip_us", "t_op_us",
      "beta_max", "t_pulse_us", "tc_us", "gamma_eff_per_ms", "xi"};
  return names;
}

void set_parameter(Scenario& s, const std::string& name, double value) {
  if (!std::isfinite(value)) throw ConfigError("value for '" + name + "' is not finite");
  if (name == "t_r1_us") {
    s.t_r1 = from_microseconds(value);
  } else if (name == "t_r2_us") {
    s.t_r2 = from_microseconds(value);
  } else if (name == "alpha") {
    s.alpha = value;
  } else if (name == "alpha_prime") {
    s.alpha_prime = value;
  } else if (name == "t_ip_us") {
    s.t_ip = from_microseconds(value);
  } else if (name == "t_op_us") {
    s.t_op = from_microseconds(value);
  } else if (name == "beta_max") {
    if (value != std::round(value) || value < 1) throw ConfigError("beta_max must be a positive integer");
    s.beta_max = static_cast<int>(value);
  } else if (name == "t_pulse_us") {
    s.t_pulse = from_microseconds(value);
  } else if (name == "tc_us") {
    s.cooling_time = from_microseconds(value);
  } else if (name == "gamma_eff_per_ms") {
    s.physics.gamma_eff = value * 1e3;
  } else if (name == "xi") {
    s.physics.xi = value;
  } else {
    throw ConfigError("parameter '" + name + "' cannot be swept");
  }
}

CoolingTrace run_trajectory(const PulseSchedule& schedule, const MotionalState& initial,
                            const PhysicsParams& params, const RabiTable& table) {
  CoolingTrace trace;
  const std::size_t modes = initial.mode_count();
  auto record = [&](const MotionalState& st, double t, double t_total) {
    TraceSample s{t, t_total, {}, {}};
    for (std::size_t k = 0; k < modes; ++k) {
      s.p0.push_back(ground_state_population(st, k));
      s.nbar.push_back(mean_occupation(st, k));
    }
    trace.samples.push_back(std::move(s));
  };

  MotionalState state = initial;
  record(state, 0.0, 0.0);
  Duration t{}, t_total{};
  std::size_t pulse_index = 0;
  for (const Event& ev : schedule.events()) {
    std::visit(
        [&](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, RsbPulse>) {
            try {
              state = evolve_rsb_pulse(state, e.mode, e.beta, to_seconds(e.duration), params, table,
                                       e.quench);
            } catch (const PhysicsError& err) {
              throw PhysicsError("pulse " + std::to_string(pulse_index) + ": " + err.what());
            }
            t += e.duration;
            t_total += e.duration;
            ++pulse_index;
          } else if constexpr (std::is_same_v<T, Repump>) {
            state = apply_repump(state);
            t_total += e.gap;
            record(state, to_seconds(t), to_seconds(t_total));
          }
        },
        ev);
  }
  return trace;
}

std::vector<Duration> cooling_time_grid(Duration tc, Duration shortest_allowed, std::size_t points) {
  if (points == 0) throw ConfigError("cooling-time grid needs at least one point");
  if (tc <= Duration::zero()) throw ConfigError("cooling time must be positive for a sweep");
  const Duration lo = std::min(tc, std::max(Duration{tc.count() / 50}, shortest_allowed));
  if (points == 1) return {tc};
  std::vector<Duration> grid;
  const double a = std::log(static_cast<double>(lo.count()));
  const double b = std::log(static_cast<double>(tc.count()));
  for (std::size_t i = 0; i < points; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(points - 1);
    grid.push_back(Duration{std::llround(std::exp(a + f * (b - a)))});
  }
  grid.front() = lo;
  grid.back() = tc;
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

void SweepPlan::validate() const {
  base.validate();
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  const auto& names = sweepable_parameters();
  if (std::find(names.begin(), names.end(), parameter) == names.end()) {
    throw ConfigError("parameter '" + parameter + "' cannot be swept");
  }
  const bool up = values.size() < 2 || values[1] > values[0];
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (up ? !(values[i] > values[i - 1]) : !(values[i] < values[i - 1])) {
      throw ConfigError("swept values must be strictly monotone");
    }
  }
  if (grid_points < 4) throw ConfigError("cooling-time grid needs at least 4 points for a fit");
  if (expected_t0) {
    for (double v : values) {
      Scenario s = base;
      set_parameter(s, parameter, v);
      if (to_seconds(s.cooling_time) < 7.0 * *expected_t0) {
        throw ConfigError("cooling-time grid must span at least 7x the expected T0");
      }
    }
  }
}

std::string to_string(PointStatus status) {
  switch (status) {
    case PointStatus::Ok: return "ok";
    case PointStatus::FitFailed: return "fit_failed";
    case PointStatus::SimFailed: return "sim_failed";
    case PointStatus::ScheduleFailed: return "schedule_failed";
  }
  return "?";
}

namespace {

void simulate_point(const SweepPlan& plan, const RabiTable& table, const MotionalState& initial,
                    SweepPoint& out) {
  Scenario s = plan.base;
  try {
    set_parameter(s, plan.parameter, out.value);
    s.validate();
  } catch (const Error& e) {
    out.status = PointStatus::ScheduleFailed;
    out.message = e.what();
    return;
  }
  std::vector<PulseSchedule> schedules;
  try {
    for (Duration tc : cooling_time_grid(s.cooling_time, s.longest_pulse(), plan.grid_points)) {
      schedules.push_back(s.schedule(tc));
      out.cooling_times.push_back(to_seconds(tc));
    }
  } catch (const Error& e) {
    out.status = PointStatus::ScheduleFailed;
    out.message = e.what();
    out.cooling_times.clear();
    return;
  }
  out.p0.assign(initial.mode_count(), {});
  try {
    for (std::size_t j = 0; j < schedules.size(); ++j) {
      CoolingTrace trace = run_trajectory(schedules[j], initial, s.physics, table);
      for (std::size_t k = 0; k < initial.mode_count(); ++k) {
        out.p0[k].push_back(trace.samples.back().p0[k]);
      }
      if (plan.keep_traces && j + 1 == schedules.size()) out.trace = std::move(trace);
    }
  } catch (const Error& e) {
    out.status = PointStatus::SimFailed;
    out.message = e.what();
  }
}

GroundStateSeries series_of(const SweepPoint& p, std::size_t mode) {
  return {p.cooling_times, p.p0[mode]};
}

void fail_fit(SweepPoint& p, const std::string& why) {
  p.status = PointStatus::FitFailed;
  if (p.message.empty()) p.message = why;
}

void fit_individually(SweepResult& r, std::size_t mode, const std::vector<std::size_t>& idx) {
  for (std::size_t i : idx) {
    SweepPoint& p = r.points[i];
    try {
      p.fits[mode] = fit_cooling_constant(series_of(p, mode));
    } catch (const Error& e) {
      fail_fit(p, e.what());
    }
  }
}

void fit_mode(SweepResult& r, std::size_t mode, bool shared) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    if (r.points[i].status == PointStatus::Ok) idx.push_back(i);
  }
  if (!shared || idx.size() < 2) {
    fit_individually(r, mode, idx);
    return;
  }
  std::vector<std::size_t> usable;
  std::vector<GroundStateSeries> series;
  for (std::size_t i : idx) {
    GroundStateSeries s = series_of(r.points[i], mode);
    const auto [lo, hi] = std::minmax_element(s.p0.begin(), s.p0.end());
    if (s.t.size() < 4) {
      fail_fit(r.points[i], "fewer than 4 cooling-time samples");
    } else if (*hi - *lo < 1e-6) {
      fail_fit(r.points[i], "ground-state population is flat");
    } else {
      usable.push_back(i);
      series.push_back(std::move(s));
    }
  }
  if (usable.empty()) return;
  try {
    const JointCoolingFit joint = fit_cooling_joint(series);
    for (std::size_t j = 0; j < usable.size(); ++j) r.points[usable[j]].fits[mode] = joint.at(j);
  } catch (const FitError&) {
    fit_individually(r, mode, usable);
  }
}

}  // namespace

SweepResult run_sweep(const SweepPlan& plan) {
  plan.validate();
  SweepResult result;
  result.kind = plan.base.kind;
  result.parameter = plan.parameter;
  result.mode_count = plan.base.modes.size();
  const RabiTable table(plan.base.modes);
  const MotionalState initial = plan.base.initial_state();

  result.points.resize(plan.values.size());
  for (std::size_t i = 0; i < plan.values.size(); ++i) {
    result.points[i].value = plan.values[i];
    result.points[i].fits.assign(result.mode_count, CoolingFit{});
  }

  unsigned workers = plan.workers ? plan.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(plan.values.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < result.points.size(); i = next++) {
      simulate_point(plan, table, initial, result.points[i]);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  for (std::size_t k = 0; k < result.mode_count; ++k) fit_mode(result, k, plan.shared_fit);
  return result;
}

Optimum find_optimum(const SweepResult& result, Objective objective) {
  std::optional<Optimum> best;
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    const SweepPoint& p = result.points[i];
    if (p.status != PointStatus::Ok) continue;
    double score = p.fits.at(0).t0;
    if (objective == Objective::MinMaxPerMode) {
      for (const CoolingFit& f : p.fits) score = std::max(score, f.t0);
    }
    if (!best || score < best->objective) best = Optimum{i, p.value, p.fits, score};
  }
  if (!best) throw FitError("no sweep point produced a successful fit");
  return *best;
}

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  os << "swept_param,value,mode,nbar_i,nbar_f,T0_us,residual,status\n";
  const double nan = std::nan("");
  for (const SweepPoint& p : result.points) {
    for (std::size_t k = 0; k < result.mode_count; ++k) {
      const bool ok = p.status == PointStatus::Ok;
      const CoolingFit& f = p.fits.at(k);
      os << result.parameter << ',' << fmt(p.value) << ',' << k << ',' << fmt(ok ? f.nbar_i : nan)
         << ',' << fmt(ok ? f.nbar_f : nan) << ',' << fmt(ok ? f.t0 * 1e6 : nan) << ','
         << fmt(ok ? f.residual_norm : nan) << ',' << to_string(p.status) << '\n';
    }
  }
}

void write_trace_csv(std::ostream& os, const CoolingTrace& trace) {
  os << "t_us,t_total_us,mode,P0,nbar\n";
  for (const TraceSample& s : trace.samples) {
    for (std::size_t k = 0; k < s.p0.size(); ++k) {
      os << fmt(s.t * 1e6) << ',' << fmt(s.t_total * 1e6) << ',' << k << ',' << fmt(s.p0[k]) << ','
         << fmt(s.nbar[k]) << '\n';
    }
  }
}

}  // namespace sbc
