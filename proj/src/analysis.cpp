#include "sbc/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sbc/error.hpp"

namespace sbc {

GroundStateSeries GroundStateSeries::from_trace(const CoolingTrace& trace, std::size_t mode) {
  GroundStateSeries s;
  for (const TraceSample& x : trace.samples) {
    s.t.push_back(x.t);
    s.p0.push_back(x.p0.at(mode));
  }
  return s;
}

double cooling_model(double t, double nbar_i, double nbar_f, double t0) {
  return 1.0 / (1.0 + nbar_f + (nbar_i - nbar_f) * std::exp(-t / t0));
}

namespace {

void check_series(const GroundStateSeries& s) {
  if (s.t.size() != s.p0.size()) throw InvalidDataError("series time and P0 lengths differ");
  if (s.t.size() < 4) throw InvalidDataError("cooling fit needs at least 4 samples");
  for (std::size_t i = 1; i < s.t.size(); ++i) {
    if (!(s.t[i] > s.t[i - 1])) throw InvalidDataError("sample times must increase strictly");
  }
  const auto [lo, hi] = std::minmax_element(s.p0.begin(), s.p0.end());
  if (*hi - *lo < 1e-6) throw DegenerateDataError("ground-state population is flat; T0 is not identifiable");
}

double occupation_of(double p0) { return std::clamp(1.0 / std::max(p0, 1e-6) - 1.0, 0.0, 1e4); }

// Time at which the series crosses halfway between its first and last value.
double half_crossing(const GroundStateSeries& s) {
  const double target = 0.5 * (s.p0.front() + s.p0.back());
  const bool rising = s.p0.back() >= s.p0.front();
  for (std::size_t i = 1; i < s.t.size(); ++i) {
    const bool crossed = rising ? s.p0[i] >= target : s.p0[i] <= target;
    if (crossed) {
      const double f = (target - s.p0[i - 1]) / (s.p0[i] - s.p0[i - 1]);
      return s.t[i - 1] + std::clamp(f, 0.0, 1.0) * (s.t[i] - s.t[i - 1]);
    }
  }
  return s.t.back();
}

// Parameters: [nbar_i, nbar_f, log t0_0, ..., log t0_{K-1}], the first two
// optionally frozen.
class CoolingProblem {
 public:
  CoolingProblem(std::span<const GroundStateSeries> series, bool free_occupations)
      : series_(series), free_(free_occupations) {
    for (const auto& s : series_) rows_ += s.t.size();
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return (free_ ? 2 : 0) + series_.size(); }

  // Residuals model - data; Jacobian with respect to the free parameters.
  void evaluate(const Eigen::VectorXd& full, Eigen::VectorXd& r, Eigen::MatrixXd* jac) const {
    r.resize(static_cast<Eigen::Index>(rows_));
    if (jac) jac->setZero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols()));
    const double ni = full[0], nf = full[1];
    Eigen::Index row = 0;
    const Eigen::Index off = free_ ? 2 : 0;
    for (std::size_t k = 0; k < series_.size(); ++k) {
      const double t0 = std::exp(full[2 + static_cast<Eigen::Index>(k)]);
      const auto& s = series_[k];
      for (std::size_t i = 0; i < s.t.size(); ++i, ++row) {
        const double e = std::exp(-s.t[i] / t0);
        const double d = 1.0 + nf + (ni - nf) * e;
        r[row] = 1.0 / d - s.p0[i];
        if (jac) {
          const double g = -1.0 / (d * d);
          if (free_) {
            (*jac)(row, 0) = g * e;
            (*jac)(row, 1) = g * (1.0 - e);
          }
          (*jac)(row, off + static_cast<Eigen::Index>(k)) = g * (ni - nf) * e * (s.t[i] / t0);
        }
      }
    }
  }

  std::vector<double> rms(const Eigen::VectorXd& r) const {
    std::vector<double> out;
    Eigen::Index row = 0;
    for (const auto& s : series_) {
      const auto n = static_cast<Eigen::Index>(s.t.size());
      out.push_back(std::sqrt(r.segment(row, n).squaredNorm() / static_cast<double>(n)));
      row += n;
    }
    return out;
  }

  bool free_occupations() const { return free_; }

 private:
  std::span<const GroundStateSeries> series_;
  bool free_;
  std::size_t rows_ = 0;
};

struct LmResult {
  Eigen::VectorXd params;
  double cost;
  std::size_t iterations;
  bool converged;
};

// Levenberg-Marquardt with diagonal damping; occupations projected onto >= 0.
LmResult levenberg_marquardt(const CoolingProblem& prob, Eigen::VectorXd full) {
  const Eigen::Index start = prob.free_occupations() ? 0 : 2;
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  prob.evaluate(full, r, &jac);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  constexpr std::size_t kMaxIter = 500;
  for (std::size_t it = 1; it <= kMaxIter; ++it) {
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() < 1e-15) return {full, cost, it, true};
    bool improved = false;
    while (lambda < 1e12) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, i) += lambda * std::max(jtj(i, i), 1e-12);
      const Eigen::VectorXd step = a.ldlt().solve(-grad);
      Eigen::VectorXd trial = full;
      trial.segment(start, step.size()) += step;
      if (prob.free_occupations()) {
        trial[0] = std::max(trial[0], 0.0);
        trial[1] = std::max(trial[1], 0.0);
      }
      for (Eigen::Index i = 2; i < trial.size(); ++i) trial[i] = std::clamp(trial[i], -40.0, 10.0);
      Eigen::VectorXd rt;
      prob.evaluate(trial, rt, nullptr);
      const double ct = rt.squaredNorm();
      if (ct < cost) {
        const double rel = (cost - ct) / std::max(cost, 1e-300);
        const double move = (trial - full).lpNorm<Eigen::Infinity>();
        full = trial;
        cost = ct;
        lambda = std::max(lambda / 10.0, 1e-12);
        prob.evaluate(full, r, &jac);
        improved = true;
        if (rel < 1e-14 || move < 1e-12) return {full, cost, it, true};
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) return {full, cost, it, true};  // no descent direction left
  }
  return {full, cost, kMaxIter, false};
}

}  // namespace

JointCoolingFit fit_cooling_joint(std::span<const GroundStateSeries> series) {
  if (series.empty()) throw InvalidDataError("joint fit needs at least one series");
  for (const auto& s : series) check_series(s);

  double ni0 = 0.0, nf0 = 0.0;
  for (const auto& s : series) {
    ni0 += occupation_of(s.p0.front());
    nf0 += occupation_of(s.p0.back());
  }
  ni0 /= static_cast<double>(series.size());
  nf0 /= static_cast<double>(series.size());

  const CoolingProblem prob(series, true);
  const std::size_t k = series.size();
  LmResult best{Eigen::VectorXd(), std::numeric_limits<double>::infinity(), 0, false};
  // Half-crossing under the model sits near t0 ln 2; a few scalings guard
  // against landing in the wrong basin.
  for (double scale : {1.0, 0.3, 3.0}) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(2 + k));
    x[0] = ni0;
    x[1] = nf0;
    for (std::size_t j = 0; j < k; ++j) {
      x[2 + static_cast<Eigen::Index>(j)] = std::log(scale * half_crossing(series[j]) / std::log(2.0));
    }
    LmResult res = levenberg_marquardt(prob, x);
    if (res.converged && res.cost < best.cost) best = std::move(res);
  }
  if (!std::isfinite(best.cost)) {
    throw FitError("cooling fit did not converge within the iteration limit (" +
                   std::to_string(series.size()) + " series)");
  }

  JointCoolingFit out;
  out.nbar_i = best.params[0];
  out.nbar_f = best.params[1];
  for (std::size_t j = 0; j < k; ++j) out.t0.push_back(std::exp(best.params[2 + static_cast<Eigen::Index>(j)]));
  Eigen::VectorXd r;
  prob.evaluate(best.params, r, nullptr);
  out.residual_norm = prob.rms(r);
  out.iterations = best.iterations;
  if (std::abs(out.nbar_i - out.nbar_f) < 1e-6 * std::max(1.0, out.nbar_i)) {
    throw DegenerateDataError("fitted nbar_i equals nbar_f; T0 is not identifiable");
  }
  return out;
}

CoolingFit fit_cooling_constant(const GroundStateSeries& series,
                                std::optional<SharedOccupations> shared) {
  if (!shared) {
    const GroundStateSeries one[] = {series};
    return fit_cooling_joint(one).at(0);
  }
  check_series(series);
  if (std::abs(shared->nbar_i - shared->nbar_f) < 1e-9) {
    throw DegenerateDataError("shared nbar_i equals nbar_f; T0 is not identifiable");
  }
  const GroundStateSeries one[] = {series};
  const CoolingProblem prob(one, false);
  LmResult best{Eigen::VectorXd(), std::numeric_limits<double>::infinity(), 0, false};
  for (double scale : {1.0, 0.3, 3.0}) {
    Eigen::VectorXd x(3);
    x << shared->nbar_i, shared->nbar_f, std::log(scale * half_crossing(series) / std::log(2.0));
    LmResult res = levenberg_marquardt(prob, x);
    if (res.converged && res.cost < best.cost) best = std::move(res);
  }
  if (!std::isfinite(best.cost)) throw FitError("cooling fit did not converge");
  Eigen::VectorXd r;
  prob.evaluate(best.params, r, nullptr);
  return {shared->nbar_i, shared->nbar_f, std::exp(best.params[2]), prob.rms(r)[0]};
}

double extract_nbar(double rsb_excitation, double bsb_excitation, double background) {
  const double r = rsb_excitation - background;
  const double b = bsb_excitation - background;
  if (r < 0.0) throw InvalidDataError("red-sideband excitation is below the background");
  if (r >= b) {
    throw InvalidDataError("red-sideband excitation " + std::to_string(r) +
                           " is not below blue-sideband excitation " + std::to_string(b));
  }
  return r / (b - r);
}

std::vector<StrategyRow> sideband_efficiency_map(double eta, int n_max) {
  if (!(eta > 0.0)) throw ConfigError("Lamb-Dicke parameter must be positive");
  std::vector<StrategyRow> rows;
  for (int n = 1; n <= n_max; ++n) {
    StrategyRow best{n, 0, -1.0};
    for (int beta = 1; beta <= n; ++beta) {
      const double eff = beta * std::abs(rabi_frequency(n, n - beta, eta, 1.0));
      if (eff > best.efficiency) best = {n, beta, eff};
    }
    rows.push_back(best);
  }
  return rows;
}

std::vector<Band> strategy_bands(std::span<const StrategyRow> rows) {
  std::vector<Band> bands;
  for (const StrategyRow& r : rows) {
    if (!bands.empty() && bands.back().beta == r.best_beta && bands.back().n_last + 1 == r.n) {
      bands.back().n_last = r.n;
    } else {
      bands.push_back({r.best_beta, r.n, r.n});
    }
  }
  return bands;
}

std::vector<double> simulate_sideband_spectrum(const MotionalState& state, double probe_time,
                                               std::span<const double> detunings,
                                               Transition transition, const RabiTable& table,
                                               double omega0, std::size_t mode) {
  if (!(probe_time > 0.0)) throw ConfigError("probe time must be positive");
  if (mode >= state.mode_count()) throw ConfigError("probe addresses a missing mode");
  const double eta = table.mode(mode).eta;
  const int beta = transition.kind == TransitionKind::Carrier ? 0 : transition.beta;
  if (beta < 0) throw ConfigError("sideband order must be non-negative");

  // Collapse the joint grid to (addressed level, spectator factor) weights.
  struct Term {
    double weight;
    double rabi;
  };
  std::vector<Term> terms;
  std::vector<int> n(state.mode_count(), 0);
  for (std::size_t i = 0; i < state.size(); ++i) {
    const double w = state.pop_down[i] + state.pop_up[i];
    if (w > 0.0) {
      double spectator = 1.0;
      for (std::size_t k = 0; k < state.mode_count(); ++k) {
        if (k != mode) spectator *= table.carrier(k, n[k]);
      }
      const int na = n[mode];
      double rabi = 0.0;
      switch (transition.kind) {
        case TransitionKind::Carrier: rabi = rabi_frequency(na, na, eta, omega0); break;
        case TransitionKind::Red: rabi = na >= beta ? rabi_frequency(na, na - beta, eta, omega0) : 0.0; break;
        case TransitionKind::Blue: rabi = rabi_frequency(na, na + beta, eta, omega0); break;
      }
      terms.push_back({w, rabi * spectator});
    }
    for (std::size_t k = state.mode_count(); k-- > 0;) {
      if (++n[k] < state.levels[k]) break;
      n[k] = 0;
    }
  }

  std::vector<double> out;
  out.reserve(detunings.size());
  for (double delta : detunings) {
    double p = 0.0;
    for (const Term& term : terms) {
      const double w2 = term.rabi * term.rabi;
      const double g2 = w2 + delta * delta;
      if (g2 == 0.0) continue;
      const double s = std::sin(0.5 * std::sqrt(g2) * probe_time);
      p += term.weight * (w2 / g2) * s * s;
    }
    out.push_back(p);
  }
  return out;
}

std::vector<int> dominance_window(int beta, int competing_order, double eta, int n_max) {
  std::vector<int> levels;
  for (int n = beta; n <= n_max; ++n) {
    const double own = std::abs(rabi_frequency(n, n - beta, eta, 1.0));
    const double other =
        n >= competing_order ? std::abs(rabi_frequency(n, n - competing_order, eta, 1.0)) : 0.0;
    if (own > other) levels.push_back(n);
  }
  return levels;
}

double average_pi_time(int beta, double eta, double nbar, double omega0,
                       std::span<const int> levels) {
  if (!(nbar >= 0.0)) throw ConfigError("mean occupation must be non-negative");
  if (levels.empty()) throw InvalidDataError("empty level window");
  const double q = nbar / (1.0 + nbar);
  double num = 0.0, den = 0.0;
  for (int n : levels) {
    const double w = n == 0 ? 1.0 : std::pow(q, n);
    const double rabi = std::abs(rabi_frequency(n, n - beta, eta, omega0));
    if (rabi == 0.0 || w == 0.0) continue;
    num += w * constants::pi / rabi;
    den += w;
  }
  if (den == 0.0) {
    // nbar -> 0 limit: only the lowest level of the window matters.
    return constants::pi / std::abs(rabi_frequency(levels.front(), levels.front() - beta, eta, omega0));
  }
  return num / den;
}

double average_pi_time(int beta, double eta, double nbar, double omega0, int competing_order) {
  return average_pi_time(beta, eta, nbar, omega0, dominance_window(beta, competing_order, eta));
}

}  // namespace sbc
