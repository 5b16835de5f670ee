#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "sbc/error.hpp"
#include "sbc/sweep.hpp"

using namespace sbc;

namespace {

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

SweepPlan small_plan() {
  SweepPlan plan;
  plan.base = single_ion_scenario();
  plan.base.cooling_time = from_microseconds(300);
  plan.base.modes[0].n_max = 60;
  plan.parameter = "t_r1_us";
  plan.values = {6, 10, 14};
  plan.grid_points = 6;
  plan.workers = 1;
  return plan;
}

SweepResult manual_result(std::vector<std::vector<double>> t0s, std::vector<PointStatus> status) {
  SweepResult r;
  r.mode_count = t0s.front().size();
  for (std::size_t i = 0; i < t0s.size(); ++i) {
    SweepPoint p;
    p.value = static_cast<double>(i);
    p.status = status[i];
    for (double t : t0s[i]) p.fits.push_back({10.0, 0.01, t, 0.0});
    r.points.push_back(p);
  }
  return r;
}

}  // namespace

TEST(RunTrajectory, EmptyScheduleGivesInitialSample) {
  const Scenario s = single_ion_scenario();
  const RabiTable table(s.modes);
  const auto init = s.initial_state();
  const CoolingTrace trace = run_trajectory(PulseSchedule{}, init, s.physics, table);
  ASSERT_EQ(trace.samples.size(), 1u);
  EXPECT_EQ(trace.samples[0].t, 0.0);
  EXPECT_DOUBLE_EQ(trace.samples[0].p0[0], ground_state_population(init));
  EXPECT_DOUBLE_EQ(trace.samples[0].nbar[0], mean_occupation(init));
}

TEST(RunTrajectory, SampleAfterEveryRepump) {
  const Scenario s = single_ion_scenario();
  const RabiTable table(s.modes);
  const auto sched = s.schedule(from_microseconds(105));
  const CoolingTrace trace = run_trajectory(sched, s.initial_state(), s.physics, table);
  ASSERT_EQ(trace.samples.size(), sched.repump_count() + 1);
  for (std::size_t i = 1; i < trace.samples.size(); ++i) {
    EXPECT_GT(trace.samples[i].t, trace.samples[i - 1].t);
    EXPECT_GT(trace.samples[i].t_total, trace.samples[i].t);
  }
  EXPECT_NEAR(trace.samples.back().t, 105e-6, 1e-15);
  EXPECT_NEAR(trace.samples.back().t_total, to_seconds(sched.total_time()), 1e-15);
}

TEST(RunTrajectory, SingleIonEndpoint) {
  const Scenario s = single_ion_scenario();
  const RabiTable table(s.modes);
  const CoolingTrace trace = run_trajectory(s.schedule(), s.initial_state(), s.physics, table);
  EXPECT_LE(trace.samples.back().nbar[0], 0.05);
}

TEST(RunTrajectory, TwoModeEndpoint) {
  Scenario s = two_mode_scenario();
  s.cooling_time = from_microseconds(2500);
  const RabiTable table(s.modes);
  const CoolingTrace trace = run_trajectory(s.schedule(), s.initial_state(), s.physics, table);
  EXPECT_LE(trace.samples.back().nbar[0], 0.1);
  EXPECT_LE(trace.samples.back().nbar[1], 0.1);
}

TEST(RunTrajectory, DriftErrorNamesPulse) {
  Scenario s = single_ion_scenario();
  s.physics.trace_tolerance = 1e-300;
  const RabiTable table(s.modes);
  try {
    run_trajectory(s.schedule(from_microseconds(30)), s.initial_state(), s.physics, table);
    FAIL() << "expected a physics error";
  } catch (const PhysicsError& e) {
    EXPECT_NE(std::string(e.what()).find("pulse 0"), std::string::npos) << e.what();
  }
}

TEST(CoolingTimeGrid, LogSpacedWithFloor) {
  const auto g = cooling_time_grid(from_microseconds(500), from_microseconds(20), 12);
  ASSERT_EQ(g.size(), 12u);
  EXPECT_EQ(g.front(), from_microseconds(20));
  EXPECT_EQ(g.back(), from_microseconds(500));
  for (std::size_t i = 2; i < g.size(); ++i) {
    const double r1 = static_cast<double>(g[i].count()) / g[i - 1].count();
    const double r0 = static_cast<double>(g[i - 1].count()) / g[i - 2].count();
    // grid points are rounded to whole picoseconds
    EXPECT_NEAR(r1, r0, 1e-6);
  }
  const auto d = cooling_time_grid(from_microseconds(500), from_microseconds(1), 12);
  EXPECT_EQ(d.front(), from_microseconds(10));
}

TEST(RunSweep, RowsPerValueAndFits) {
  const SweepResult r = run_sweep(small_plan());
  ASSERT_EQ(r.points.size(), 3u);
  for (const auto& p : r.points) {
    EXPECT_EQ(p.status, PointStatus::Ok) << p.message;
    EXPECT_EQ(p.cooling_times.size(), 6u);
    EXPECT_GT(p.fits[0].t0, 0.0);
  }
  // shared occupations
  EXPECT_DOUBLE_EQ(r.points[0].fits[0].nbar_i, r.points[2].fits[0].nbar_i);
}

TEST(RunSweep, DeterministicAcrossWorkerCounts) {
  SweepPlan a = small_plan();
  SweepPlan b = small_plan();
  b.workers = 3;
  std::ostringstream ca, cb, cc;
  write_sweep_csv(ca, run_sweep(a));
  write_sweep_csv(cb, run_sweep(b));
  write_sweep_csv(cc, run_sweep(b));
  EXPECT_EQ(ca.str(), cb.str());
  EXPECT_EQ(cb.str(), cc.str());
}

TEST(RunSweep, SingleValue) {
  SweepPlan plan = small_plan();
  plan.values = {10};
  const SweepResult r = run_sweep(plan);
  ASSERT_EQ(r.points.size(), 1u);
  EXPECT_EQ(r.points[0].status, PointStatus::Ok);
  std::ostringstream csv;
  write_sweep_csv(csv, r);
  const auto lines = split(csv.str(), '\n');
  EXPECT_EQ(lines.size(), 2u);
}

TEST(RunSweep, FailedPointsAreFlagged) {
  SweepPlan plan = small_plan();
  plan.parameter = "alpha";
  plan.values = {0.25, 0.5, 1.5};
  const SweepResult r = run_sweep(plan);
  ASSERT_EQ(r.points.size(), 3u);
  EXPECT_EQ(r.points[2].status, PointStatus::ScheduleFailed);
  EXPECT_FALSE(r.points[2].message.empty());
  EXPECT_EQ(r.points[0].status, PointStatus::Ok);
  EXPECT_EQ(find_optimum(r, Objective::MinT0).index < 2, true);
}

TEST(RunSweep, TwoModeCsvHasRowPerMode) {
  SweepPlan plan;
  plan.base = two_mode_scenario();
  plan.base.modes[0].n_max = 45;
  plan.base.modes[1].n_max = 30;
  plan.base.cooling_time = from_microseconds(600);
  plan.parameter = "alpha_prime";
  plan.values = {0.5};
  plan.grid_points = 5;
  const SweepResult r = run_sweep(plan);
  std::ostringstream csv;
  write_sweep_csv(csv, r);
  const auto lines = split(csv.str(), '\n');
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(split(lines[1])[2], "0");
  EXPECT_EQ(split(lines[2])[2], "1");
}

TEST(SweepPlan, Validation) {
  SweepPlan plan = small_plan();
  plan.values = {10, 6, 8};
  EXPECT_THROW(plan.validate(), ConfigError);
  plan.values = {10, 10};
  EXPECT_THROW(plan.validate(), ConfigError);
  plan.values = {14, 10, 6};
  EXPECT_NO_THROW(plan.validate());
  plan.parameter = "colour";
  EXPECT_THROW(plan.validate(), ConfigError);
  plan = small_plan();
  plan.expected_t0 = 60e-6;
  EXPECT_THROW(plan.validate(), ConfigError);
  plan.expected_t0 = 40e-6;
  EXPECT_NO_THROW(plan.validate());
}

TEST(FindOptimum, SingleSuccessfulPoint) {
  const auto r = manual_result({{5e-5}, {3e-5}, {7e-5}}, {PointStatus::FitFailed, PointStatus::SimFailed, PointStatus::Ok});
  const Optimum o = find_optimum(r, Objective::MinT0);
  EXPECT_EQ(o.index, 2u);
}

TEST(FindOptimum, AllFailed) {
  const auto r = manual_result({{5e-5}, {3e-5}}, {PointStatus::FitFailed, PointStatus::SimFailed});
  EXPECT_THROW(find_optimum(r, Objective::MinT0), FitError);
}

TEST(FindOptimum, MaxPerModeObjective) {
  const auto r = manual_result({{40e-6, 90e-6}, {60e-6, 65e-6}, {30e-6, 120e-6}},
                               {PointStatus::Ok, PointStatus::Ok, PointStatus::Ok});
  const Optimum o = find_optimum(r, Objective::MinMaxPerMode);
  EXPECT_EQ(o.index, 1u);
  for (const auto& p : r.points) EXPECT_LE(o.objective, std::max(p.fits[0].t0, p.fits[1].t0));
  EXPECT_EQ(find_optimum(r, Objective::MinT0).index, 2u);
}

TEST(Csv, SweepSchemaRoundTrip) {
  const SweepResult r = run_sweep(small_plan());
  std::ostringstream csv;
  write_sweep_csv(csv, r);
  const auto lines = split(csv.str(), '\n');
  EXPECT_EQ(lines[0], "swept_param,value,mode,nbar_i,nbar_f,T0_us,residual,status");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i]);
    ASSERT_EQ(f.size(), 8u);
    EXPECT_EQ(f[0], "t_r1_us");
    EXPECT_DOUBLE_EQ(std::stod(f[1]), r.points[i - 1].value);
    EXPECT_NEAR(std::stod(f[5]), r.points[i - 1].fits[0].t0 * 1e6, 1e-8 * std::stod(f[5]));
    EXPECT_EQ(f[7], "ok");
  }
}

TEST(Csv, TraceSchemaRoundTrip) {
  const Scenario s = single_ion_scenario();
  const RabiTable table(s.modes);
  const CoolingTrace trace = run_trajectory(s.schedule(from_microseconds(50)), s.initial_state(), s.physics, table);
  std::ostringstream csv;
  write_trace_csv(csv, trace);
  const auto lines = split(csv.str(), '\n');
  EXPECT_EQ(lines[0], "t_us,t_total_us,mode,P0,nbar");
  ASSERT_EQ(lines.size(), trace.samples.size() + 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i]);
    ASSERT_EQ(f.size(), 5u);
    EXPECT_NEAR(std::stod(f[0]), trace.samples[i - 1].t * 1e6, 1e-6);
    EXPECT_NEAR(std::stod(f[3]), trace.samples[i - 1].p0[0], 1e-9);
  }
}

TEST(Scenario, ParametersByName) {
  Scenario s = high_order_scenario();
  set_parameter(s, "beta_max", 6);
  EXPECT_EQ(s.beta_max, 6);
  EXPECT_THROW(set_parameter(s, "beta_max", 2.5), ConfigError);
  set_parameter(s, "gamma_eff_per_ms", 10);
  EXPECT_DOUBLE_EQ(s.physics.gamma_eff, 1e4);
  EXPECT_THROW(set_parameter(s, "nope", 1), ConfigError);
  EXPECT_NEAR(s.initial[0].nbar(s.modes[0]), 20.34, 0.01);
}

TEST(Scenario, CalibrationHitsPiTime) {
  const double w0 = calibrate_omega0(16e-6, 0.3);
  EXPECT_NEAR(3.141592653589793 / (w0 * rabi_frequency(1, 0, 0.3, 1.0)), 16e-6, 1e-18);
}
