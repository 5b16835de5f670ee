#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "sbc/config.hpp"
#include "sbc/error.hpp"

using namespace sbc;

namespace {

RunConfig from_text(const std::string& text, const std::vector<std::string>& overrides = {}) {
  std::istringstream in(text);
  KeyValues kv = parse_key_values(in);
  apply_overrides(kv, overrides);
  return build_run_config(kv);
}

std::string error_of(const std::string& text) {
  try {
    from_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, DefaultsAreSingleIon) {
  const RunConfig c = from_text("");
  EXPECT_EQ(c.scenario.kind, ScenarioKind::SingleIon);
  EXPECT_DOUBLE_EQ(c.scenario.modes[0].eta, 0.3);
  EXPECT_EQ(c.scenario.cooling_time, from_microseconds(500));
  EXPECT_DOUBLE_EQ(c.scenario.physics.gamma_eff, 42e3);
}

TEST(Config, UnitsInKeyNames) {
  const RunConfig c = from_text(
      "# single ion\n"
      "tc_us = 250\n"
      "gamma_eff_per_ms = 30   # quench\n"
      "trap_mhz = 1.5\n"
      "t_r1_us = 12.5\n"
      "repump_gap_us = 4\n");
  EXPECT_EQ(c.scenario.cooling_time, from_microseconds(250));
  EXPECT_DOUBLE_EQ(c.scenario.physics.gamma_eff, 30e3);
  EXPECT_NEAR(c.scenario.modes[0].frequency, 2 * 3.141592653589793 * 1.5e6, 1e-6);
  EXPECT_EQ(c.scenario.t_r1, from_microseconds(12.5));
  EXPECT_DOUBLE_EQ(c.scenario.physics.repump_gap, 4e-6);
}

TEST(Config, UnknownKeyIsNamed) {
  const std::string e = error_of("tc_us = 100\ngamma_eff = 42\n");
  EXPECT_NE(e.find("gamma_eff"), std::string::npos) << e;
}

TEST(Config, MalformedValueIsNamed) {
  const std::string e = error_of("t_r1_us = ten\n");
  EXPECT_NE(e.find("t_r1_us"), std::string::npos) << e;
  EXPECT_NE(error_of("quench = maybe\n").find("quench"), std::string::npos);
  EXPECT_NE(error_of("n_max = 3.5\n").find("n_max"), std::string::npos);
}

TEST(Config, MalformedLines) {
  EXPECT_FALSE(error_of("just words\n").empty());
  EXPECT_FALSE(error_of("eta =\n").empty());
  EXPECT_FALSE(error_of("eta = 0.3\neta = 0.4\n").empty());
}

TEST(Config, KeyMustMatchScenario) {
  const std::string e = error_of("scenario = two_mode\nt_r1_us = 10\n");
  EXPECT_NE(e.find("t_r1_us"), std::string::npos);
  EXPECT_FALSE(error_of("scenario = high_order\nalpha_prime = 0.5\n").empty());
  EXPECT_FALSE(error_of("scenario = bogus\n").empty());
}

TEST(Config, OverridesWin) {
  const RunConfig c = from_text("tc_us = 100\n", {"tc_us=200", "alpha = 0.3"});
  EXPECT_EQ(c.scenario.cooling_time, from_microseconds(200));
  EXPECT_DOUBLE_EQ(c.scenario.alpha, 0.3);
  KeyValues kv;
  EXPECT_THROW(apply_overrides(kv, {"novalue"}), ConfigError);
}

TEST(Config, PiTimeCalibration) {
  const RunConfig c = from_text("eta = 0.45\nt_pi_n1_us = 12\n");
  EXPECT_DOUBLE_EQ(c.scenario.physics.omega0, calibrate_omega0(12e-6, 0.45));
  const RunConfig t = from_text("scenario = two_mode\nt_pi_op_us = 30\n");
  EXPECT_DOUBLE_EQ(t.scenario.physics.mode_omega0[1], calibrate_omega0(30e-6, 0.16));
  EXPECT_DOUBLE_EQ(t.scenario.physics.mode_omega0[0], calibrate_omega0(21e-6, 0.21));
}

TEST(Config, InitialStates) {
  const RunConfig c = from_text("nbar_initial = 4\n");
  EXPECT_DOUBLE_EQ(c.scenario.initial[0].nbar(c.scenario.modes[0]), 4.0);
  const RunConfig t = from_text("scenario = two_mode\ntemperature_mk = 0.5\nnbar_initial_op = 2\n");
  EXPECT_NEAR(t.scenario.initial[0].nbar(t.scenario.modes[0]),
              nbar_from_temperature(0.5e-3, t.scenario.modes[0]), 1e-12);
  EXPECT_DOUBLE_EQ(t.scenario.initial[1].nbar(t.scenario.modes[1]), 2.0);
  EXPECT_FALSE(error_of("temperature_mk = 1\nnbar_initial = 3\n").empty());
}

TEST(Config, TwoModeDefaultsToMaxPerModeObjective) {
  EXPECT_EQ(from_text("scenario = two_mode\n").objective, Objective::MinMaxPerMode);
  EXPECT_EQ(from_text("scenario = two_mode\nobjective = min_t0\n").objective, Objective::MinT0);
}

TEST(Config, SweepKeys) {
  const RunConfig c = from_text(
      "scenario = high_order\nsweep_param = beta_max\nsweep_values = 1:12:1\ntc_grid_points = 8\nworkers = 2\n");
  EXPECT_EQ(c.sweep_values.size(), 12u);
  EXPECT_EQ(c.sweep_plan().grid_points, 8u);
  EXPECT_EQ(c.sweep_plan().workers, 2u);
}

TEST(Config, ValueLists) {
  EXPECT_EQ(parse_value_list("2, 4,6"), (std::vector<double>{2, 4, 6}));
  const auto r = parse_value_list("0.05:0.95:0.1");
  ASSERT_EQ(r.size(), 10u);
  EXPECT_DOUBLE_EQ(r[3], 0.35);
  EXPECT_DOUBLE_EQ(r.back(), 0.95);
  EXPECT_THROW(parse_value_list("1:0:1"), ConfigError);
  EXPECT_THROW(parse_value_list("1,x"), ConfigError);
}

TEST(Config, SpectrumKeys) {
  const RunConfig c = from_text(
      "transition = blue\nprobe_beta = 2\nprobe_us = 15\ndetuning_min_mhz = -0.1\ndetuning_max_mhz = 0.1\n"
      "detuning_points = 11\nspectrum_state = initial\n");
  EXPECT_EQ(c.spectrum.transition.kind, TransitionKind::Blue);
  EXPECT_EQ(c.spectrum.transition.beta, 2);
  EXPECT_FALSE(c.spectrum.cooled);
  EXPECT_NEAR(c.spectrum.detuning_max, 2 * 3.141592653589793 * 1e5, 1e-6);
  EXPECT_FALSE(error_of("probe_mode = 1\n").empty());
}

TEST(Config, KnownKeysListed) {
  const auto keys = known_config_keys();
  EXPECT_NE(std::find(keys.begin(), keys.end(), "tc_us"), keys.end());
  EXPECT_NE(std::find(keys.begin(), keys.end(), "alpha_prime"), keys.end());
}
