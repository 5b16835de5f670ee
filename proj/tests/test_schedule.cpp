#include <gtest/gtest.h>

#include <random>
#include <variant>

#include "sbc/error.hpp"
#include "sbc/schedule.hpp"

using namespace sbc;

namespace {

Duration us(double v) { return from_microseconds(v); }

struct Count {
  int full = 0;
  int padding = 0;
  Duration padding_length{};
};

Count count(const PulseSchedule& s, std::size_t mode, int beta, Duration full) {
  Count c;
  for (const RsbPulse& p : s.pulses()) {
    if (p.mode != mode || p.beta != beta) continue;
    if (p.duration == full) {
      ++c.full;
    } else {
      ++c.padding;
      c.padding_length = p.duration;
    }
  }
  return c;
}

void expect_repump_after_each_pulse(const PulseSchedule& s) {
  const auto& ev = s.events();
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (std::holds_alternative<RsbPulse>(ev[i])) {
      ASSERT_LT(i + 1, ev.size());
      EXPECT_TRUE(std::holds_alternative<Repump>(ev[i + 1]));
    }
  }
}

}  // namespace

TEST(Duration, MicrosecondFormatting) {
  EXPECT_EQ(format_microseconds(us(10)), "10");
  EXPECT_EQ(format_microseconds(us(2.5)), "2.5");
  EXPECT_EQ(format_microseconds(Duration{1}), "0.000001");
  EXPECT_DOUBLE_EQ(to_seconds(us(500)), 500e-6);
}

TEST(SingleIonSchedule, EvenSplit) {
  const auto s = build_single_ion_schedule(us(500), 0.5, us(10), us(10));
  EXPECT_EQ(count(s, 0, 2, us(10)).full, 25);
  EXPECT_EQ(count(s, 0, 1, us(10)).full, 25);
  EXPECT_EQ(count(s, 0, 1, us(10)).padding + count(s, 0, 2, us(10)).padding, 0);
  EXPECT_EQ(s.repump_count(), 50u);
  EXPECT_EQ(s.total_time(), us(750));
  EXPECT_EQ(s.cooling_time(), us(500));
  // second order first
  EXPECT_EQ(s.pulses().front().beta, 2);
  EXPECT_EQ(s.pulses().back().beta, 1);
  expect_repump_after_each_pulse(s);
}

TEST(SingleIonSchedule, AlphaOneIsSecondOrderOnly) {
  const auto s = build_single_ion_schedule(us(500), 1.0, us(10), us(10));
  EXPECT_EQ(count(s, 0, 2, us(10)).full, 50);
  EXPECT_EQ(count(s, 0, 1, us(10)).full, 0);
  EXPECT_EQ(s.pulse_count(), 50u);
}

TEST(SingleIonSchedule, PaddingMakesUpRemainder) {
  const auto s = build_single_ion_schedule(us(505), 0.5, us(10), us(10));
  for (int beta : {1, 2}) {
    const Count c = count(s, 0, beta, us(10));
    EXPECT_EQ(c.full, 25);
    EXPECT_EQ(c.padding, 1);
    EXPECT_EQ(c.padding_length, us(2.5));
  }
  EXPECT_EQ(s.cooling_time(), us(505));
  // padding closes each block
  const auto p = s.pulses();
  EXPECT_EQ(p[25].duration, us(2.5));
  EXPECT_EQ(p[25].beta, 2);
  EXPECT_EQ(p.back().duration, us(2.5));
}

TEST(SingleIonSchedule, ShortCoolingTimeWithEmptyBlockFails) {
  EXPECT_THROW(build_single_ion_schedule(us(8), 0.5, us(10), us(10)), ScheduleError);
  EXPECT_NO_THROW(build_single_ion_schedule(us(8), 1.0, us(10), us(10)));
  EXPECT_THROW(build_single_ion_schedule(us(100), 0.5, us(0), us(10)), ScheduleError);
  EXPECT_THROW(build_single_ion_schedule(us(100), 1.5, us(10), us(10)), ScheduleError);
}

TEST(SingleIonSchedule, ZeroCoolingTimeIsEmpty) {
  const auto s = build_single_ion_schedule(us(0), 0.5, us(10), us(10));
  EXPECT_TRUE(s.empty());
  EXPECT_EQ(s.total_time(), Duration::zero());
}

TEST(TwoModeSchedule, SurplusThenAlternation) {
  const auto s = build_two_mode_schedule(us(2400), 0.5, us(15), us(20));
  EXPECT_EQ(count(s, 0, 1, us(15)).full, 80);
  EXPECT_EQ(count(s, 1, 1, us(20)).full, 60);
  const auto p = s.pulses();
  ASSERT_EQ(p.size(), 140u);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(p[i].mode, 0u);
  for (std::size_t i = 20; i < p.size(); ++i) EXPECT_EQ(p[i].mode, (i - 20) % 2);
  for (const auto& x : p) EXPECT_EQ(x.beta, 1);
  EXPECT_EQ(s.cooling_time(), us(2400));
  expect_repump_after_each_pulse(s);
}

TEST(TwoModeSchedule, AlphaZeroIsInPhaseOnly) {
  const auto s = build_two_mode_schedule(us(300), 0.0, us(15), us(20));
  for (const auto& x : s.pulses()) EXPECT_EQ(x.mode, 0u);
  EXPECT_EQ(s.pulse_count(), 20u);
}

TEST(TwoModeSchedule, PaddingPerMode) {
  const auto s = build_two_mode_schedule(us(2500), 0.5, us(15), us(20));
  const Count ip = count(s, 0, 1, us(15));
  const Count op = count(s, 1, 1, us(20));
  EXPECT_EQ(ip.full, 83);
  EXPECT_EQ(ip.padding, 1);
  EXPECT_EQ(ip.padding_length, us(5));
  EXPECT_EQ(op.full, 62);
  EXPECT_EQ(op.padding, 1);
  EXPECT_EQ(op.padding_length, us(10));
  EXPECT_EQ(s.cooling_time(), us(2500));
}

TEST(TwoModeSchedule, PropertyAlternationAfterSurplus) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> a(0.0, 1.0), tc(100, 3000), t(5, 30);
  for (int trial = 0; trial < 200; ++trial) {
    const Duration c = us(std::round(tc(rng)));
    const Duration tip = us(std::round(t(rng))), top = us(std::round(t(rng)));
    const double alpha = std::round(a(rng) * 20) / 20;
    const auto s = build_two_mode_schedule(c, alpha, tip, top);
    EXPECT_EQ(s.cooling_time(), c);
    const auto p = s.pulses();
    std::vector<RsbPulse> full;
    for (const auto& x : p) {
      if (x.duration == (x.mode == 0 ? tip : top) && !x.padding) full.push_back(x);
    }
    const std::size_t n_ip = std::count_if(full.begin(), full.end(), [](auto& x) { return x.mode == 0; });
    const std::size_t n_op = full.size() - n_ip;
    const std::size_t surplus = n_ip > n_op ? n_ip - n_op : n_op - n_ip;
    for (std::size_t i = surplus + 1; i < p.size(); ++i) {
      EXPECT_NE(p[i].mode, p[i - 1].mode) << "trial " << trial;
    }
  }
}

TEST(HighOrderSchedule, EqualBlocksDescending) {
  const auto s = build_high_order_schedule(us(800), 8, us(10));
  const auto p = s.pulses();
  ASSERT_EQ(p.size(), 80u);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(p[i].beta, 8 - static_cast<int>(i / 10));
    EXPECT_EQ(p[i].duration, us(10));
  }
}

TEST(HighOrderSchedule, SingleOrder) {
  const auto s = build_high_order_schedule(us(95), 1, us(10));
  EXPECT_EQ(count(s, 0, 1, us(10)).full, 9);
  EXPECT_EQ(count(s, 0, 1, us(10)).padding, 1);
  EXPECT_THROW(build_high_order_schedule(us(95), 0, us(10)), ScheduleError);
}

TEST(HighOrderSchedule, PropertyNonIncreasingOrdersAndExactTotals) {
  std::mt19937 rng(9);
  std::uniform_int_distribution<int> bm(1, 12);
  std::uniform_int_distribution<long long> ps(10'000'000, 3'000'000'000);
  for (int trial = 0; trial < 200; ++trial) {
    const Duration tc{ps(rng)};
    const int beta_max = bm(rng);
    const auto s = build_high_order_schedule(tc, beta_max, us(10));
    EXPECT_EQ(s.cooling_time(), tc);
    EXPECT_EQ(s.total_time(), tc + static_cast<long long>(s.repump_count()) * us(5));
    const auto p = s.pulses();
    for (std::size_t i = 1; i < p.size(); ++i) EXPECT_LE(p[i].beta, p[i - 1].beta);
  }
}

TEST(PulseSchedule, RejectsPulseWithoutRepump) {
  EXPECT_THROW(PulseSchedule({RsbPulse{0, 1, us(10)}}), ScheduleError);
  EXPECT_THROW(PulseSchedule({RsbPulse{0, 1, us(10)}, RsbPulse{0, 1, us(10)}, Repump{us(3), us(5)}}),
               ScheduleError);
  EXPECT_NO_THROW(PulseSchedule({RsbPulse{0, 1, us(10)}, Repump{us(3), us(5)}, Probe{}}));
}

TEST(PulseSchedule, TextRoundTrip) {
  const auto s = build_two_mode_schedule(us(2517.25), 0.45, us(15), us(20), {}, false);
  const std::string text = s.to_text();
  EXPECT_EQ(text.substr(0, text.find('\n')), "RSB mode=0 beta=1 dur_us=15 quench=0");
  const auto back = PulseSchedule::parse(text);
  EXPECT_EQ(back.to_text(), text);
  EXPECT_EQ(back.cooling_time(), s.cooling_time());
  EXPECT_EQ(back.total_time(), s.total_time());
}

TEST(PulseSchedule, ParseErrors) {
  EXPECT_THROW(PulseSchedule::parse("RSB mode=0 beta=1 dur_us=abc quench=1\nREPUMP dur_us=3 gap_us=5\n"),
               ScheduleError);
  EXPECT_THROW(PulseSchedule::parse("FOO\n"), ScheduleError);
  EXPECT_THROW(PulseSchedule::parse("RSB mode=0 beta=1 dur_us=10\nREPUMP dur_us=3 gap_us=5\n"), ScheduleError);
  EXPECT_THROW(PulseSchedule::parse("RSB mode=0 beta=1 dur_us=10 quench=1\n"), ScheduleError);
  EXPECT_NO_THROW(PulseSchedule::parse("PROBE\n"));
}
