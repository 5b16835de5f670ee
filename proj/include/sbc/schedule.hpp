#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace sbc {

// Schedule arithmetic is done in integer picoseconds so that block sums
// reproduce the requested cooling time exactly.
using Duration = std::chrono::duration<std::int64_t, std::pico>;

Duration from_microseconds(double us);
double to_seconds(Duration d);
double to_microseconds(Duration d);
// Shortest exact decimal rendering in microseconds ("2.5", "10", "0.000001").
std::string format_microseconds(Duration d);

struct RsbPulse {
  std::size_t mode = 0;
  int beta = 1;
  Duration duration{};
  bool quench = true;
  bool padding = false;
  bool operator==(const RsbPulse&) const = default;
};

struct Repump {
  Duration duration{};
  Duration gap{};
  bool operator==(const Repump&) const = default;
};

struct Probe {
  bool operator==(const Probe&) const = default;
};

using Event = std::variant<RsbPulse, Repump, Probe>;

struct RepumpTiming {
  Duration pulse = Duration{3'000'000};  // 3 us
  Duration gap = Duration{5'000'000};    // 5 us
};

class PulseSchedule {
 public:
  PulseSchedule() = default;
  explicit PulseSchedule(std::vector<Event> events);

  const std::vector<Event>& events() const { return events_; }
  bool empty() const { return events_.empty(); }

  /// Sum of RSB pulse durations (T_c).
  Duration cooling_time() const;
  /// T_c plus one repump gap per repump event (T_total).
  Duration total_time() const;
  std::size_t repump_count() const;
  std::size_t pulse_count() const;
  std::vector<RsbPulse> pulses() const;

  /// One event per line:
  ///   RSB mode=<i> beta=<b> dur_us=<x> quench=<0|1>
  ///   REPUMP dur_us=<x> gap_us=<y>
  ///   PROBE
  std::string to_text() const;
  /// Inverse of to_text; throws ScheduleError on malformed input.
  static PulseSchedule parse(const std::string& text);

 private:
  std::vector<Event> events_;
};

/// N_R2 second-order pulses followed by N_R1 first-order pulses, each block
/// topped up with one shorter padding pulse so that the pulses sum to T_c.
PulseSchedule build_single_ion_schedule(Duration cooling_time, double alpha, Duration t_r2,
                                        Duration t_r1, RepumpTiming repump = {},
                                        bool quench = true);

/// Two modes (0 = in-phase, 1 = out-of-phase): the mode with more pulses
/// leads with its surplus, then the modes alternate ip, op.
PulseSchedule build_two_mode_schedule(Duration cooling_time, double alpha_prime, Duration t_ip,
                                      Duration t_op, RepumpTiming repump = {},
                                      bool quench = true);

/// Equal time per order, orders applied from beta_max down to 1.
PulseSchedule build_high_order_schedule(Duration cooling_time, int beta_max, Duration t_pulse,
                                        RepumpTiming repump = {}, bool quench = true,
                                        std::size_t mode = 0);

}  // namespace sbc
