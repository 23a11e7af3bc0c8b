#pragma once

// Adaptive Dormand-Prince 5(4) integrator for small fixed-size systems.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace capcon::ode {

template <std::size_t N>
using State = std::array<double, N>;

struct StepControl {
  double rtol = 1e-8;
  double atol = 0.0;
  double initial_step = 0.0;  // 0 selects |t1 - t0| / 100
  double min_step = 1e-14;    // relative to |t1 - t0|
  double max_step = 0.0;      // 0 means unbounded
  long max_steps = 200000;
};

enum class Status {
  Completed,
  Stopped,        // the observer asked to stop
  StepUnderflow,  // step size fell below min_step
  TooManySteps,
};

struct Stats {
  long accepted = 0;
  long rejected = 0;
};

namespace detail {

template <std::size_t N>
bool finite(const State<N>& s) {
  for (double v : s) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace detail

/// Integrates y' = f(t, y) from t0 to t1 (either direction). After every
/// accepted step `observer(t, y, f(t, y))` is called; returning false stops
/// the integration. The observer also sees the initial point.
template <std::size_t N, class Rhs, class Observer>
Status integrate(Rhs&& f, double t0, State<N> y, double t1,
                 const StepControl& ctl, Observer&& observer,
                 Stats* stats = nullptr) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                   a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                   a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                   a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  Stats local;
  Stats& st = stats ? *stats : local;
  const double span = t1 - t0;
  if (span == 0) {
    State<N> k1 = f(t0, y);
    observer(t0, y, k1);
    return Status::Completed;
  }
  const double dir = span > 0 ? 1.0 : -1.0;
  const double h_min = ctl.min_step * std::abs(span);
  const double h_max = ctl.max_step > 0 ? ctl.max_step : std::abs(span);
  double h = ctl.initial_step > 0 ? ctl.initial_step : std::abs(span) / 100;
  h = std::min(h, h_max);
  double t = t0;
  State<N> k1 = f(t, y);
  if (!observer(t, y, k1)) return Status::Stopped;

  State<N> k2, k3, k4, k5, k6, k7, tmp, ynew;
  auto stage = [&](State<N>& out, auto&& combo, double tc) {
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * dir * combo(i);
    out = f(tc, tmp);
  };

  for (long n = 0; n < ctl.max_steps; ++n) {
    bool last = false;
    if (h >= std::abs(t1 - t)) {
      h = std::abs(t1 - t);
      last = true;
    }
    const double hs = h * dir;
    stage(k2, [&](std::size_t i) { return a21 * k1[i]; }, t + c2 * hs);
    stage(k3, [&](std::size_t i) { return a31 * k1[i] + a32 * k2[i]; },
          t + c3 * hs);
    stage(k4,
          [&](std::size_t i) {
            return a41 * k1[i] + a42 * k2[i] + a43 * k3[i];
          },
          t + c4 * hs);
    stage(k5,
          [&](std::size_t i) {
            return a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i];
          },
          t + c5 * hs);
    stage(k6,
          [&](std::size_t i) {
            return a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                   a65 * k5[i];
          },
          t + hs);
    for (std::size_t i = 0; i < N; ++i) {
      ynew[i] = y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] +
                             a75 * k5[i] + a76 * k6[i]);
    }
    const double tnew = last ? t1 : t + hs;
    k7 = f(tnew, ynew);

    double err = 0.0;
    bool ok = detail::finite(ynew) && detail::finite(k7);
    if (ok) {
      for (std::size_t i = 0; i < N; ++i) {
        const double e = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                               e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double sc =
            ctl.atol + ctl.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        err = std::max(err, std::abs(e) / sc);
      }
      ok = std::isfinite(err);
    }

    if (ok && err <= 1.0) {
      ++st.accepted;
      t = tnew;
      y = ynew;
      k1 = k7;
      if (!observer(t, y, k1)) return Status::Stopped;
      if (last) return Status::Completed;
      const double fac =
          err == 0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h = std::min(h * fac, h_max);
    } else {
      ++st.rejected;
      h *= ok ? std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9) : 0.25;
      if (h < h_min) return Status::StepUnderflow;
    }
  }
  return Status::TooManySteps;
}

}  // namespace capcon::ode
