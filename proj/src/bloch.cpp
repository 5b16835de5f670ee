#include "sbc/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sbc/error.hpp"
#include "sbc/ode.hpp"

namespace sbc {

void PhysicsParams::validate() const {
  if (!(omega0 > 0.0) && mode_omega0.empty()) throw ConfigError("carrier Rabi frequency must be positive");
  for (double w : mode_omega0) {
    if (!(w > 0.0)) throw ConfigError("per-mode carrier Rabi frequency must be positive");
  }
  if (!(gamma_eff >= 0.0) || !(gamma_background >= 0.0)) throw ConfigError("decay rates must be non-negative");
  if (!(xi >= 0.0 && xi < 1.0)) throw ConfigError("xi must lie in [0, 1)");
  if (!(pulse_area_reduction >= 0.0)) throw ConfigError("pulse area reduction must be non-negative");
  if (!(repump_pulse >= 0.0) || !(repump_gap >= 0.0)) throw ConfigError("repump timings must be non-negative");
  if (!(rtol > 0.0) || !(step_fraction > 0.0)) throw ConfigError("integrator tolerances must be positive");
}

namespace {

std::size_t total_size(std::span<const int> levels) {
  std::size_t n = 1;
  for (int l : levels) {
    if (l < 1) throw ConfigError("every mode needs at least one level");
    n *= static_cast<std::size_t>(l);
  }
  return n;
}

MotionalState empty_state(std::vector<int> levels) {
  MotionalState s;
  const std::size_t n = total_size(levels);
  s.levels = std::move(levels);
  s.pop_down.assign(n, 0.0);
  s.pop_up.assign(n, 0.0);
  s.coherence.assign(n, {0.0, 0.0});
  return s;
}

// One slice of the joint grid along the addressed mode at fixed spectator
// levels: pd[0..L), pu[0..L), Im(coherence)[beta..L).
struct BlockRhs {
  std::span<const double> omega;  // Omega_{n-beta,n}, indexed by n
  int levels;
  int beta;
  double gamma;
  double xi;

  void operator()(double, std::span<const double> y, std::span<double> dy) const {
    const int L = levels;
    const double* pd = y.data();
    const double* pu = pd + L;
    const double* s = pu + L;
    double* dpd = dy.data();
    double* dpu = dpd + L;
    double* ds = dpu + L;
    for (int m = 0; m < L; ++m) {
      const double decay = gamma * pu[m];
      dpu[m] = -decay;
      dpd[m] = (1.0 - xi) * decay;
    }
    for (int m = 0; m + 1 < L; ++m) dpd[m + 1] += xi * gamma * pu[m];
    // Heating out of the top level stays on the top level.
    dpd[L - 1] += xi * gamma * pu[L - 1];
    for (int n = beta; n < L; ++n) {
      const int j = n - beta;
      const double w = omega[n];
      const double sj = s[j];
      ds[j] = 0.5 * w * (pd[n] - pu[j]) - 0.5 * gamma * sj;
      dpd[n] -= w * sj;
      dpu[j] += w * sj;
    }
  }
};

}  // namespace

MotionalState MotionalState::ground(std::vector<int> levels) {
  MotionalState s = empty_state(std::move(levels));
  s.pop_down[0] = 1.0;
  return s;
}

MotionalState MotionalState::product(std::span<const std::vector<double>> marginals) {
  std::vector<int> levels;
  levels.reserve(marginals.size());
  for (const auto& m : marginals) levels.push_back(static_cast<int>(m.size()));
  MotionalState s = empty_state(levels);
  std::vector<int> n(levels.size(), 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    double p = 1.0;
    for (std::size_t k = 0; k < levels.size(); ++k) p *= marginals[k][n[k]];
    s.pop_down[i] = p;
    for (std::size_t k = levels.size(); k-- > 0;) {
      if (++n[k] < levels[k]) break;
      n[k] = 0;
    }
  }
  return s;
}

MotionalState MotionalState::fock(std::vector<int> levels, std::span<const int> n, bool upper) {
  MotionalState s = empty_state(std::move(levels));
  const std::size_t i = s.index(n);
  (upper ? s.pop_up : s.pop_down)[i] = 1.0;
  return s;
}

std::size_t MotionalState::stride(std::size_t mode) const {
  std::size_t st = 1;
  for (std::size_t k = mode + 1; k < levels.size(); ++k) st *= static_cast<std::size_t>(levels[k]);
  return st;
}

std::size_t MotionalState::index(std::span<const int> n) const {
  if (n.size() != levels.size()) throw ConfigError("Fock index rank does not match mode count");
  std::size_t i = 0;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (n[k] < 0 || n[k] >= levels[k]) throw ConfigError("Fock index outside truncation");
    i = i * static_cast<std::size_t>(levels[k]) + static_cast<std::size_t>(n[k]);
  }
  return i;
}

double MotionalState::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < size(); ++i) t += pop_down[i] + pop_up[i];
  return t;
}

std::vector<double> MotionalState::marginal(std::size_t mode) const {
  std::vector<double> m(static_cast<std::size_t>(levels.at(mode)), 0.0);
  const std::size_t st = stride(mode);
  const std::size_t L = m.size();
  for (std::size_t i = 0; i < size(); ++i) m[(i / st) % L] += pop_down[i] + pop_up[i];
  return m;
}

MotionalState evolve_rsb_pulse(const MotionalState& state, std::size_t mode, int beta,
                               double duration, const PhysicsParams& params,
                               const RabiTable& table, bool quench_on) {
  if (mode >= state.mode_count() || mode >= table.mode_count()) {
    throw ConfigError("pulse addresses mode " + std::to_string(mode) + " which does not exist");
  }
  if (!(duration >= 0.0)) throw ConfigError("pulse duration must be non-negative");
  const int L = state.levels[mode];
  if (table.mode(mode).levels() != L) throw ConfigError("Rabi table truncation does not match state");
  if (beta < 1 || beta > L - 1) throw ConfigError("sideband order must lie in [1, n_max]");

  const double t_eff = duration - params.pulse_area_reduction;
  if (t_eff <= 0.0) return state;

  MotionalState out = state;
  const Coupling coupling{mode, beta};
  const bool keep_coherence = state.coupling && *state.coupling == coupling;
  out.coupling = coupling;

  const double gamma = (quench_on ? params.gamma_eff : 0.0) + params.gamma_background;
  const double omega0 = params.carrier(mode);
  ode::Tolerances tol;
  tol.rtol = params.rtol;
  tol.atol = params.atol;
  tol.max_step = 1.0 / (params.step_fraction * std::max(omega0, gamma));

  const std::size_t st = state.stride(mode);
  const std::size_t outer = state.size() / (st * static_cast<std::size_t>(L));
  const double re_decay = std::exp(-0.5 * gamma * t_eff);
  const double trace_before = state.trace();

  thread_local ode::DormandPrince stepper;
  std::vector<double> y(3 * static_cast<std::size_t>(L) - beta);
  std::vector<double> omega(static_cast<std::size_t>(L));

  for (std::size_t hi = 0; hi < outer; ++hi) {
    for (std::size_t lo = 0; lo < st; ++lo) {
      const std::size_t base = hi * st * L + lo;
      // Spectator factor: product of carrier elements of all other modes.
      double spectator = 1.0;
      {
        std::size_t rem = base;
        for (std::size_t k = state.mode_count(); k-- > 0;) {
          const auto lk = static_cast<std::size_t>(state.levels[k]);
          if (k != mode) spectator *= table.carrier(k, static_cast<int>(rem % lk));
          rem /= lk;
        }
      }
      bool empty = true;
      for (int n = 0; n < L; ++n) {
        const std::size_t i = base + n * st;
        y[n] = state.pop_down[i];
        y[L + n] = state.pop_up[i];
        if (y[n] != 0.0 || y[L + n] != 0.0) empty = false;
      }
      for (int n = beta; n < L; ++n) {
        const std::size_t i = base + n * st;
        const std::complex<double> c = keep_coherence ? state.coherence[i] : 0.0;
        y[2 * L + (n - beta)] = c.imag();
        out.coherence[i] = {c.real() * re_decay, 0.0};
        if (c != 0.0) empty = false;
      }
      for (int n = 0; n < beta; ++n) out.coherence[base + n * st] = 0.0;
      if (empty) continue;

      for (int n = 0; n < L; ++n) omega[n] = omega0 * spectator * table.red_sideband(mode, n, beta);
      BlockRhs rhs{omega, L, beta, gamma, params.xi};
      stepper.integrate(rhs, y, 0.0, t_eff, tol);

      for (int n = 0; n < L; ++n) {
        const std::size_t i = base + n * st;
        out.pop_down[i] = y[n];
        out.pop_up[i] = y[L + n];
      }
      for (int n = beta; n < L; ++n) {
        const std::size_t i = base + n * st;
        out.coherence[i].imag(y[2 * L + (n - beta)]);
      }
    }
  }

  for (auto* pops : {&out.pop_down, &out.pop_up}) {
    for (double& v : *pops) {
      if (v < 0.0) {
        if (v < -1e-8) throw PhysicsError("population " + std::to_string(v) + " went negative during pulse");
        v = 0.0;
      }
    }
  }
  const double drift = std::abs(out.trace() - trace_before);
  if (drift > params.trace_tolerance) {
    throw PhysicsError("trace drifted by " + std::to_string(drift) + " during pulse");
  }
  return out;
}

MotionalState apply_repump(const MotionalState& state) {
  MotionalState out = state;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.pop_down[i] += out.pop_up[i];
    out.pop_up[i] = 0.0;
  }
  std::fill(out.coherence.begin(), out.coherence.end(), std::complex<double>{});
  out.coupling.reset();
  return out;
}

double ground_state_population(const MotionalState& state, std::size_t mode) {
  return state.marginal(mode).front();
}

double mean_occupation(const MotionalState& state, std::size_t mode) {
  const auto m = state.marginal(mode);
  double nbar = 0.0;
  for (std::size_t n = 0; n < m.size(); ++n) nbar += static_cast<double>(n) * m[n];
  return nbar;
}

}  // namespace sbc
