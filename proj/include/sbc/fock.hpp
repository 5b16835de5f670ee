#pragma once

#include <span>
#include <variant>
#include <vector>

namespace sbc {

namespace constants {
// CODATA 2018 exact / recommended values.
inline constexpr double hbar = 1.054571817e-34;      // J s
inline constexpr double boltzmann = 1.380649e-23;    // J / K
inline constexpr double pi = 3.14159265358979323846;
}  // namespace constants

// Harmonic motional mode of the crystal.
struct TrapMode {
  double frequency = 0.0;  // angular, rad/s
  double eta = 0.0;        // Lamb-Dicke parameter
  int n_max = 80;          // highest retained Fock level

  int levels() const { return n_max + 1; }
  // Throws ConfigError when a field is out of range.
  void validate() const;
};

// Initial motional occupation, given either directly or as a temperature.
class ThermalSpec {
 public:
  static ThermalSpec from_nbar(double nbar);
  static ThermalSpec from_temperature(double kelvin);

  double nbar(const TrapMode& mode) const;

 private:
  struct Nbar {
    double value;
  };
  struct Temperature {
    double kelvin;
  };
  explicit ThermalSpec(std::variant<Nbar, Temperature> v) : value_(v) {}
  std::variant<Nbar, Temperature> value_;
};

/// Generalized Laguerre polynomial L_n^a(x) by upward three-term recurrence.
double laguerre(int n, int a, double x);

/// Rabi frequency of the |n> <-> |n'> transition for carrier Rabi frequency
/// `omega0`. The sign carries the Laguerre factor and is needed to locate
/// coupling zeros; use the magnitude for rates. The polynomial is indexed by
/// the smaller of n, n' and the factorial ratio is evaluated in log space so
/// that n ~ 200 does not overflow.
double rabi_frequency(int n, int n_prime, double eta, double omega0);

/// Diagonal (carrier) matrix-element factor contributed by a spectator mode
/// in level m: exp(-eta^2/2) L_m^0(eta^2).
double spectator_rabi_factor(int m, double eta_spec);

struct ThermalDistribution {
  std::vector<double> p;   // renormalized, sums to 1
  double tail_mass = 0.0;  // probability above n_max before renormalization
};

/// Geometric (Bose-Einstein) occupation truncated at n_max and renormalized.
/// Throws TruncationError if the discarded tail exceeds `max_tail`.
ThermalDistribution thermal_distribution(double nbar, int n_max, double max_tail = 0.01);

/// Mean occupation 1/(exp(hbar w / k T) - 1).
double nbar_from_temperature(double kelvin, const TrapMode& mode);

// Rabi frequencies of every mode of a crystal, in units of the carrier Rabi
// frequency. Immutable after construction.
class RabiTable {
 public:
  explicit RabiTable(std::span<const TrapMode> modes);

  std::size_t mode_count() const { return modes_.size(); }
  const TrapMode& mode(std::size_t k) const { return modes_[k]; }

  /// Omega_{n-beta,n} / Omega_0 for mode k (signed). Zero when n < beta.
  double red_sideband(std::size_t k, int n, int beta) const;
  /// Omega_{n,n} / Omega_0 for mode k; doubles as the spectator factor.
  double carrier(std::size_t k, int n) const;

 private:
  std::vector<TrapMode> modes_;
  // couplings_[k][n * levels + beta]
  std::vector<std::vector<double>> couplings_;
};

}  // namespace sbc
