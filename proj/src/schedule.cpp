#include "sbc/schedule.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "sbc/error.hpp"

namespace sbc {

namespace {

constexpr std::int64_t kPsPerUs = 1'000'000;

Duration parse_us(const std::string& s) {
  // Exact path for plain decimals with at most six fractional digits.
  const auto dot = s.find('.');
  const std::string whole = s.substr(0, dot);
  const std::string frac = dot == std::string::npos ? "" : s.substr(dot + 1);
  const auto digits = [](const std::string& x) {
    return std::all_of(x.begin(), x.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (!whole.empty() && digits(whole) && digits(frac) && frac.size() <= 6 &&
      (dot == std::string::npos || !frac.empty())) {
    std::int64_t w = 0;
    std::from_chars(whole.data(), whole.data() + whole.size(), w);
    std::int64_t f = 0;
    if (!frac.empty()) {
      std::from_chars(frac.data(), frac.data() + frac.size(), f);
      for (std::size_t i = frac.size(); i < 6; ++i) f *= 10;
    }
    return Duration{w * kPsPerUs + f};
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ScheduleError("bad duration '" + s + "'");
    return from_microseconds(v);
  } catch (const std::logic_error&) {
    throw ScheduleError("bad duration '" + s + "'");
  }
}

void require_positive(Duration d, const char* what) {
  if (d <= Duration::zero()) throw ScheduleError(std::string(what) + " must be positive");
}

void require_fraction(double f, const char* what) {
  if (!(f >= 0.0 && f <= 1.0)) throw ScheduleError(std::string(what) + " must lie in [0, 1]");
}

Duration scaled(Duration total, double fraction) {
  return Duration{static_cast<std::int64_t>(std::llround(fraction * static_cast<double>(total.count())))};
}

struct Block {
  std::size_t mode;
  int beta;
  Duration pulse;
  std::int64_t full = 0;
  Duration remainder{};
};

Block split(std::size_t mode, int beta, Duration allocated, Duration pulse) {
  Block b{mode, beta, pulse};
  b.full = allocated.count() / pulse.count();
  b.remainder = allocated - b.full * pulse;
  return b;
}

// A block that was given time but cannot hold one full pulse is only an
// error when the time is split across blocks and the whole cooling time is
// shorter than the longest pulse.
void check_blocks(Duration cooling_time, std::initializer_list<const Block*> blocks) {
  Duration longest{};
  for (const Block* b : blocks) longest = std::max(longest, b->pulse);
  if (cooling_time >= longest) return;
  for (const Block* b : blocks) {
    if (b->full == 0 && b->remainder > Duration::zero()) {
      throw ScheduleError("cooling time " + format_microseconds(cooling_time) +
                          " us leaves the beta=" + std::to_string(b->beta) + " block on mode " +
                          std::to_string(b->mode) + " without a full pulse");
    }
  }
}

class Builder {
 public:
  Builder(RepumpTiming repump, bool quench) : repump_(repump), quench_(quench) {}

  void pulse(std::size_t mode, int beta, Duration d, bool padding = false) {
    events_.emplace_back(RsbPulse{mode, beta, d, quench_, padding});
    events_.emplace_back(Repump{repump_.pulse, repump_.gap});
  }
  void full(const Block& b, std::int64_t count) {
    for (std::int64_t i = 0; i < count; ++i) pulse(b.mode, b.beta, b.pulse);
  }
  void pad(const Block& b) {
    if (b.remainder > Duration::zero()) pulse(b.mode, b.beta, b.remainder, true);
  }
  PulseSchedule finish() { return PulseSchedule(std::move(events_)); }

 private:
  RepumpTiming repump_;
  bool quench_;
  std::vector<Event> events_;
};

}  // namespace

Duration from_microseconds(double us) {
  return Duration{static_cast<std::int64_t>(std::llround(us * static_cast<double>(kPsPerUs)))};
}

double to_seconds(Duration d) { return static_cast<double>(d.count()) * 1e-12; }

double to_microseconds(Duration d) { return static_cast<double>(d.count()) / kPsPerUs; }

std::string format_microseconds(Duration d) {
  const std::int64_t ps = d.count();
  std::string out = (ps < 0 ? "-" : "") + std::to_string(std::abs(ps) / kPsPerUs);
  std::int64_t frac = std::abs(ps) % kPsPerUs;
  if (frac != 0) {
    std::string f = std::to_string(frac);
    f.insert(0, 6 - f.size(), '0');
    while (f.back() == '0') f.pop_back();
    out += "." + f;
  }
  return out;
}

PulseSchedule::PulseSchedule(std::vector<Event> events) : events_(std::move(events)) {
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (std::holds_alternative<RsbPulse>(events_[i])) {
      if (i + 1 >= events_.size() || !std::holds_alternative<Repump>(events_[i + 1])) {
        throw ScheduleError("RSB event " + std::to_string(i) + " is not followed by a repump");
      }
      if (std::get<RsbPulse>(events_[i]).duration < Duration::zero()) {
        throw ScheduleError("negative pulse duration");
      }
    }
  }
}

Duration PulseSchedule::cooling_time() const {
  Duration t{};
  for (const Event& e : events_) {
    if (const auto* p = std::get_if<RsbPulse>(&e)) t += p->duration;
  }
  return t;
}

Duration PulseSchedule::total_time() const {
  Duration t = cooling_time();
  for (const Event& e : events_) {
    if (const auto* r = std::get_if<Repump>(&e)) t += r->gap;
  }
  return t;
}

std::size_t PulseSchedule::repump_count() const {
  return static_cast<std::size_t>(std::count_if(events_.begin(), events_.end(), [](const Event& e) {
    return std::holds_alternative<Repump>(e);
  }));
}

std::size_t PulseSchedule::pulse_count() const {
  return static_cast<std::size_t>(std::count_if(events_.begin(), events_.end(), [](const Event& e) {
    return std::holds_alternative<RsbPulse>(e);
  }));
}

std::vector<RsbPulse> PulseSchedule::pulses() const {
  std::vector<RsbPulse> out;
  for (const Event& e : events_) {
    if (const auto* p = std::get_if<RsbPulse>(&e)) out.push_back(*p);
  }
  return out;
}

std::string PulseSchedule::to_text() const {
  std::ostringstream os;
  for (const Event& e : events_) {
    if (const auto* p = std::get_if<RsbPulse>(&e)) {
      os << "RSB mode=" << p->mode << " beta=" << p->beta
         << " dur_us=" << format_microseconds(p->duration) << " quench=" << (p->quench ? 1 : 0)
         << '\n';
    } else if (const auto* r = std::get_if<Repump>(&e)) {
      os << "REPUMP dur_us=" << format_microseconds(r->duration)
         << " gap_us=" << format_microseconds(r->gap) << '\n';
    } else {
      os << "PROBE\n";
    }
  }
  return os.str();
}

PulseSchedule PulseSchedule::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<Event> events;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    std::vector<std::pair<std::string, std::string>> kv;
    for (std::string tok; ls >> tok;) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) {
        throw ScheduleError("line " + std::to_string(lineno) + ": expected key=value, got '" + tok + "'");
      }
      kv.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
    }
    auto take = [&](const std::string& key) {
      for (auto& [k, v] : kv) {
        if (k == key) return v;
      }
      throw ScheduleError("line " + std::to_string(lineno) + ": missing '" + key + "'");
    };
    auto as_int = [&](const std::string& key) {
      const std::string v = take(key);
      long long out = 0;
      const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc{} || ptr != v.data() + v.size() || out < 0) {
        throw ScheduleError("line " + std::to_string(lineno) + ": bad integer for '" + key + "'");
      }
      return out;
    };
    if (kind == "RSB") {
      if (kv.size() != 4) throw ScheduleError("line " + std::to_string(lineno) + ": RSB takes 4 fields");
      const long long q = as_int("quench");
      if (q > 1) throw ScheduleError("line " + std::to_string(lineno) + ": quench must be 0 or 1");
      events.emplace_back(RsbPulse{static_cast<std::size_t>(as_int("mode")),
                                   static_cast<int>(as_int("beta")), parse_us(take("dur_us")),
                                   q == 1, false});
    } else if (kind == "REPUMP") {
      if (kv.size() != 2) throw ScheduleError("line " + std::to_string(lineno) + ": REPUMP takes 2 fields");
      events.emplace_back(Repump{parse_us(take("dur_us")), parse_us(take("gap_us"))});
    } else if (kind == "PROBE") {
      if (!kv.empty()) throw ScheduleError("line " + std::to_string(lineno) + ": PROBE takes no fields");
      events.emplace_back(Probe{});
    } else {
      throw ScheduleError("line " + std::to_string(lineno) + ": unknown event '" + kind + "'");
    }
  }
  return PulseSchedule(std::move(events));
}

PulseSchedule build_single_ion_schedule(Duration cooling_time, double alpha, Duration t_r2,
                                        Duration t_r1, RepumpTiming repump, bool quench) {
  require_fraction(alpha, "alpha");
  require_positive(t_r1, "t_R1");
  require_positive(t_r2, "t_R2");
  if (cooling_time < Duration::zero()) throw ScheduleError("cooling time must be non-negative");
  const Duration second = scaled(cooling_time, alpha);
  const Block r2 = split(0, 2, second, t_r2);
  const Block r1 = split(0, 1, cooling_time - second, t_r1);
  if (alpha > 0.0 && alpha < 1.0) check_blocks(cooling_time, {&r2, &r1});

  Builder b(repump, quench);
  b.full(r2, r2.full);
  b.pad(r2);
  b.full(r1, r1.full);
  b.pad(r1);
  return b.finish();
}

PulseSchedule build_two_mode_schedule(Duration cooling_time, double alpha_prime, Duration t_ip,
                                      Duration t_op, RepumpTiming repump, bool quench) {
  require_fraction(alpha_prime, "alpha'");
  require_positive(t_ip, "t_ip");
  require_positive(t_op, "t_op");
  if (cooling_time < Duration::zero()) throw ScheduleError("cooling time must be non-negative");
  const Duration op_time = scaled(cooling_time, alpha_prime);
  const Block ip = split(0, 1, cooling_time - op_time, t_ip);
  const Block op = split(1, 1, op_time, t_op);
  if (alpha_prime > 0.0 && alpha_prime < 1.0) check_blocks(cooling_time, {&ip, &op});

  Builder b(repump, quench);
  const std::int64_t pairs = std::min(ip.full, op.full);
  const Block& surplus = ip.full >= op.full ? ip : op;
  b.full(surplus, surplus.full - pairs);
  // An op padding pulse placed after the last op pulse would break the
  // alternation, so it opens the interleaved section instead.
  if (pairs > 0) b.pad(op);
  for (std::int64_t i = 0; i < pairs; ++i) {
    b.full(ip, 1);
    b.full(op, 1);
  }
  b.pad(ip);
  if (pairs == 0) b.pad(op);
  return b.finish();
}

PulseSchedule build_high_order_schedule(Duration cooling_time, int beta_max, Duration t_pulse,
                                        RepumpTiming repump, bool quench, std::size_t mode) {
  if (beta_max < 1) throw ScheduleError("beta_max must be at least 1");
  require_positive(t_pulse, "pulse length");
  if (cooling_time < Duration::zero()) throw ScheduleError("cooling time must be non-negative");
  const Duration share{cooling_time.count() / beta_max};
  const Duration leftover = cooling_time - beta_max * share;

  std::vector<Block> blocks;
  for (int beta = beta_max; beta >= 1; --beta) {
    blocks.push_back(split(mode, beta, beta == 1 ? share + leftover : share, t_pulse));
  }
  if (beta_max > 1 && cooling_time < t_pulse) {
    for (const Block& blk : blocks) check_blocks(cooling_time, {&blk});
  }

  Builder b(repump, quench);
  for (const Block& blk : blocks) {
    b.full(blk, blk.full);
    b.pad(blk);
  }
  return b.finish();
}

}  // namespace sbc
