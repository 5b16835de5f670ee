#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sbc/error.hpp"

namespace sbc::ode {

struct Tolerances {
  double rtol = 1e-8;
  double atol = 1e-12;
  double max_step = 0.0;  // 0 means unbounded
  std::size_t max_steps = 10'000'000;
};

struct Stats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

// Dormand-Prince 5(4) with embedded error estimate and FSAL. The workspace
// is kept between calls so one instance can integrate many blocks of the
// same size without reallocating.
class DormandPrince {
 public:
  // rhs(t, y, dydt) must write dydt for every component.
  template <class Rhs>
  Stats integrate(Rhs&& rhs, std::span<double> y, double t0, double t1, const Tolerances& tol);

 private:
  void resize(std::size_t n) {
    if (k_[0].size() == n) return;
    for (auto& k : k_) k.assign(n, 0.0);
    tmp_.assign(n, 0.0);
    next_.assign(n, 0.0);
  }

  std::vector<double> k_[7];
  std::vector<double> tmp_;
  std::vector<double> next_;
};

template <class Rhs>
Stats DormandPrince::integrate(Rhs&& rhs, std::span<double> y, double t0, double t1,
                               const Tolerances& tol) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  // b - b* (fifth minus embedded fourth order weights)
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  Stats stats;
  const std::size_t n = y.size();
  if (n == 0 || t1 <= t0) return stats;
  resize(n);
  auto& k1 = k_[0];
  auto& k2 = k_[1];
  auto& k3 = k_[2];
  auto& k4 = k_[3];
  auto& k5 = k_[4];
  auto& k6 = k_[5];
  auto& k7 = k_[6];

  const double span = t1 - t0;
  double h = tol.max_step > 0.0 ? std::min(tol.max_step, span) : span / 100.0;
  double t = t0;
  rhs(t, std::span<const double>(y.data(), n), std::span<double>(k1));

  while (t < t1) {
    if (stats.accepted + stats.rejected >= tol.max_steps) {
      throw PhysicsError("ODE integration exceeded " + std::to_string(tol.max_steps) + " steps");
    }
    bool last = false;
    if (t + h >= t1 || (t1 - (t + h)) < 1e-12 * span) {
      h = t1 - t;
      last = true;
    }
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * a21 * k1[i];
    rhs(t + c2 * h, std::span<const double>(tmp_), std::span<double>(k2));
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * h, std::span<const double>(tmp_), std::span<double>(k3));
    for (std::size_t i = 0; i < n; ++i)
      tmp_[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * h, std::span<const double>(tmp_), std::span<double>(k4));
    for (std::size_t i = 0; i < n; ++i)
      tmp_[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + c5 * h, std::span<const double>(tmp_), std::span<double>(k5));
    for (std::size_t i = 0; i < n; ++i)
      tmp_[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    rhs(t + h, std::span<const double>(tmp_), std::span<double>(k6));
    for (std::size_t i = 0; i < n; ++i)
      next_[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    rhs(t + h, std::span<const double>(next_), std::span<double>(k7));

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ei =
          h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = tol.atol + tol.rtol * std::max(std::abs(y[i]), std::abs(next_[i]));
      err = std::max(err, std::abs(ei) / sc);
    }

    if (err <= 1.0) {
      ++stats.accepted;
      t = last ? t1 : t + h;
      std::copy(next_.begin(), next_.end(), y.begin());
      std::swap(k1, k7);
    } else {
      ++stats.rejected;
    }
    const double factor =
        err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, err <= 1.0 ? 5.0 : 1.0);
    h *= factor;
    if (tol.max_step > 0.0) h = std::min(h, tol.max_step);
    if (h < 1e-15 * span) throw PhysicsError("ODE step size underflow");
  }
  return stats;
}

}  // namespace sbc::ode
