#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sbc/fock.hpp"

namespace sbc {

// Rates and timings of the two-level cooling model. Times in seconds, rates
// in 1/s, Rabi frequencies in rad/s.
struct PhysicsParams {
  double omega0 = 0.0;
  // Optional per-mode carrier Rabi frequency; empty means `omega0` for all.
  std::vector<double> mode_omega0;
  double gamma_eff = 42e3;        // quench-induced decay of the upper state
  double gamma_background = 0.0;  // decay present with the quench off
  double xi = 0.05;               // branching into n+1 on re-emission
  double eta_tilde = 0.134;
  double pulse_area_reduction = 1e-6;
  double repump_pulse = 3e-6;
  double repump_gap = 5e-6;

  double rtol = 1e-8;
  double atol = 1e-13;
  double step_fraction = 50.0;  // step <= 1 / (step_fraction * max rate)
  double trace_tolerance = 1e-6;

  double carrier(std::size_t mode) const {
    return mode < mode_omega0.size() ? mode_omega0[mode] : omega0;
  }
  void validate() const;
};

// Pulse whose coherences a MotionalState currently carries.
struct Coupling {
  std::size_t mode = 0;
  int beta = 0;
  bool operator==(const Coupling&) const = default;
};

// Electronic x motional populations over the joint Fock grid of all modes
// (row-major, mode 0 slowest). `coherence[i]` is rho_{down i, up (i - beta)}
// for the pair coupled by `coupling` and is meaningless without it.
struct MotionalState {
  std::vector<int> levels;
  std::vector<double> pop_down;
  std::vector<double> pop_up;
  std::vector<std::complex<double>> coherence;
  std::optional<Coupling> coupling;

  static MotionalState ground(std::vector<int> levels);
  /// All population in the lower electronic state, product of per-mode
  /// distributions (each sized to its mode's level count).
  static MotionalState product(std::span<const std::vector<double>> marginals);
  static MotionalState fock(std::vector<int> levels, std::span<const int> n, bool upper = false);

  std::size_t size() const { return pop_down.size(); }
  std::size_t mode_count() const { return levels.size(); }
  std::size_t stride(std::size_t mode) const;
  std::size_t index(std::span<const int> n) const;
  double trace() const;
  /// Marginal motional distribution of one mode (both electronic states).
  std::vector<double> marginal(std::size_t mode) const;
};

/// Integrates one red-sideband pulse of order `beta` on `mode` for
/// `duration` seconds (reduced by params.pulse_area_reduction, never below
/// zero). Throws PhysicsError if the trace drifts by more than
/// params.trace_tolerance.
MotionalState evolve_rsb_pulse(const MotionalState& state, std::size_t mode, int beta,
                               double duration, const PhysicsParams& params,
                               const RabiTable& table, bool quench_on);

/// Projects all upper-state population onto the lower state at the same
/// motional level and drops coherences.
MotionalState apply_repump(const MotionalState& state);

double ground_state_population(const MotionalState& state, std::size_t mode = 0);
double mean_occupation(const MotionalState& state, std::size_t mode = 0);

/// Detection-signal model y = a (p0 - b).
constexpr double apply_signal_correction(double p0, double a = 0.7, double b = 0.23) {
  return a * (p0 - b);
}

}  // namespace sbc
