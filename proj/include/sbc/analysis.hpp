#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sbc/bloch.hpp"
#include "sbc/fock.hpp"

namespace sbc {

struct TraceSample {
  double t = 0.0;        // cumulative RSB time, s
  double t_total = 0.0;  // including repump gaps, s
  std::vector<double> p0;    // per mode
  std::vector<double> nbar;  // per mode
};

// Samples in strictly increasing t.
struct CoolingTrace {
  std::vector<TraceSample> samples;

  std::size_t mode_count() const { return samples.empty() ? 0 : samples.front().p0.size(); }
};

// (t, P0) pairs for one mode, the input of the cooling-constant fit.
struct GroundStateSeries {
  std::vector<double> t;
  std::vector<double> p0;

  static GroundStateSeries from_trace(const CoolingTrace& trace, std::size_t mode = 0);
};

struct CoolingFit {
  double nbar_i = 0.0;
  double nbar_f = 0.0;
  double t0 = 0.0;  // s
  double residual_norm = 0.0;  // RMS of P0 residuals
};

struct SharedOccupations {
  double nbar_i;
  double nbar_f;
};

struct JointCoolingFit {
  double nbar_i = 0.0;
  double nbar_f = 0.0;
  std::vector<double> t0;
  std::vector<double> residual_norm;
  std::size_t iterations = 0;

  CoolingFit at(std::size_t k) const { return {nbar_i, nbar_f, t0[k], residual_norm[k]}; }
};

/// Ground-state population of a thermal state whose mean occupation relaxes
/// exponentially from nbar_i to nbar_f with time constant t0.
double cooling_model(double t, double nbar_i, double nbar_f, double t0);

/// Least-squares fit of cooling_model to one series. With `shared` the
/// occupations are held fixed and only t0 is fitted.
CoolingFit fit_cooling_constant(const GroundStateSeries& series,
                                std::optional<SharedOccupations> shared = std::nullopt);

/// Joint fit: nbar_i and nbar_f common to all series, one t0 per series.
JointCoolingFit fit_cooling_joint(std::span<const GroundStateSeries> series);

/// Mean occupation from first-order sideband excitations,
/// Q = rsb/bsb = nbar/(1+nbar), after subtracting `background` from both.
double extract_nbar(double rsb_excitation, double bsb_excitation, double background = 0.0);

struct StrategyRow {
  int n = 0;
  int best_beta = 0;
  double efficiency = 0.0;  // beta |Omega_{n-beta,n}| / Omega_0
};

/// For each n in [1, n_max] the sideband order maximizing beta |Omega_{n-beta,n}|
/// (ties go to the smaller order).
std::vector<StrategyRow> sideband_efficiency_map(double eta, int n_max);

struct Band {
  int beta;
  int n_first;
  int n_last;
};
/// Collapses consecutive rows with the same order into level ranges.
std::vector<Band> strategy_bands(std::span<const StrategyRow> rows);

enum class TransitionKind { Carrier, Red, Blue };
struct Transition {
  TransitionKind kind = TransitionKind::Carrier;
  int beta = 1;
};

/// Excitation probability of a lower-state population after a square probe
/// pulse of `probe_time` at each detuning (rad/s) on `mode`.
std::vector<double> simulate_sideband_spectrum(const MotionalState& state, double probe_time,
                                               std::span<const double> detunings,
                                               Transition transition, const RabiTable& table,
                                               double omega0, std::size_t mode = 0);

/// Levels n in [beta, n_max] where |Omega_{n-beta,n}| strictly exceeds the
/// coupling of `competing_order` (zero where that order has no partner).
std::vector<int> dominance_window(int beta, int competing_order, double eta, int n_max = 400);

/// Thermally weighted mean of pi / |Omega_{n-beta,n}| over `levels`.
double average_pi_time(int beta, double eta, double nbar, double omega0,
                       std::span<const int> levels);

/// Same, over dominance_window(beta, competing_order, eta).
double average_pi_time(int beta, double eta, double nbar, double omega0, int competing_order);

}  // namespace sbc
