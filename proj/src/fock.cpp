#include "sbc/fock.hpp"

#include <cmath>
#include <string>

#include "sbc/error.hpp"

namespace sbc {

void TrapMode::validate() const {
  if (!(frequency > 0.0)) throw ConfigError("trap frequency must be positive");
  if (!(eta > 0.0)) throw ConfigError("Lamb-Dicke parameter must be positive");
  if (n_max < 1) throw ConfigError("n_max must be at least 1");
}

ThermalSpec ThermalSpec::from_nbar(double nbar) {
  if (!(nbar >= 0.0)) throw ConfigError("mean occupation must be non-negative");
  return ThermalSpec(Nbar{nbar});
}

ThermalSpec ThermalSpec::from_temperature(double kelvin) {
  if (!(kelvin > 0.0)) throw ConfigError("temperature must be positive");
  return ThermalSpec(Temperature{kelvin});
}

double ThermalSpec::nbar(const TrapMode& mode) const {
  if (const auto* n = std::get_if<Nbar>(&value_)) return n->value;
  return nbar_from_temperature(std::get<Temperature>(value_).kelvin, mode);
}

double laguerre(int n, int a, double x) {
  if (n == 0) return 1.0;
  double prev = 1.0;
  double curr = 1.0 + a - x;
  for (int k = 1; k < n; ++k) {
    const double next = ((2.0 * k + 1.0 + a - x) * curr - (k + a) * prev) / (k + 1.0);
    prev = curr;
    curr = next;
  }
  return curr;
}

double rabi_frequency(int n, int n_prime, double eta, double omega0) {
  const int lo = std::min(n, n_prime);
  const int hi = std::max(n, n_prime);
  const int d = hi - lo;
  const double x = eta * eta;
  const double log_ratio = 0.5 * (std::lgamma(lo + 1.0) - std::lgamma(hi + 1.0));
  // eta^d folded into the log so large orders with small eta stay finite.
  const double log_mag = -0.5 * x + log_ratio + (d > 0 ? d * std::log(eta) : 0.0);
  return omega0 * std::exp(log_mag) * laguerre(lo, d, x);
}

double spectator_rabi_factor(int m, double eta_spec) {
  const double x = eta_spec * eta_spec;
  return std::exp(-0.5 * x) * laguerre(m, 0, x);
}

ThermalDistribution thermal_distribution(double nbar, int n_max, double max_tail) {
  if (!(nbar >= 0.0)) throw ConfigError("mean occupation must be non-negative");
  if (n_max < 0) throw ConfigError("n_max must be non-negative");
  ThermalDistribution out;
  out.p.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  if (nbar == 0.0) {
    out.p[0] = 1.0;
    return out;
  }
  const double q = nbar / (1.0 + nbar);
  double pn = 1.0 / (1.0 + nbar);
  double sum = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    out.p[n] = pn;
    sum += pn;
    pn *= q;
  }
  out.tail_mass = std::pow(q, n_max + 1.0);
  if (out.tail_mass > max_tail) {
    throw TruncationError("thermal tail above n_max=" + std::to_string(n_max) + " holds " +
                          std::to_string(out.tail_mass) + " of the population (limit " +
                          std::to_string(max_tail) + ")");
  }
  for (double& v : out.p) v /= sum;
  return out;
}

double nbar_from_temperature(double kelvin, const TrapMode& mode) {
  const double x = constants::hbar * mode.frequency / (constants::boltzmann * kelvin);
  return 1.0 / std::expm1(x);
}

RabiTable::RabiTable(std::span<const TrapMode> modes) : modes_(modes.begin(), modes.end()) {
  couplings_.reserve(modes_.size());
  for (const TrapMode& m : modes_) {
    m.validate();
    const int levels = m.levels();
    std::vector<double> c(static_cast<std::size_t>(levels) * levels, 0.0);
    for (int n = 0; n < levels; ++n) {
      for (int beta = 0; beta <= n; ++beta) {
        c[static_cast<std::size_t>(n) * levels + beta] = rabi_frequency(n, n - beta, m.eta, 1.0);
      }
    }
    couplings_.push_back(std::move(c));
  }
}

double RabiTable::red_sideband(std::size_t k, int n, int beta) const {
  const int levels = modes_[k].levels();
  if (beta < 0 || n < beta || n >= levels) return 0.0;
  return couplings_[k][static_cast<std::size_t>(n) * levels + beta];
}

double RabiTable::carrier(std::size_t k, int n) const { return red_sideband(k, n, 0); }

}  // namespace sbc
