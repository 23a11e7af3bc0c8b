#pragma once

#include <cmath>
#include <random>

#include "capcon/market_model.hpp"

namespace capcon::testing {

inline ModelParams p0() { return {0.03, 0.05, 0.2, 0.1, 0.5, 0.05, 1.0}; }
// r > k, so the exception point x_e = 20 lies in the capped region.
inline ModelParams p1() { return {0.06, 0.05, 0.2, 0.1, 0.5, 0.01, 1.0}; }

// Reference boundaries from an independent scipy shooting code (DOP853,
// rtol 1e-11, two-term asymptote, reach 1e4 times the upper bracket end).
inline constexpr double kP0XStar = 15.00372668638652;
inline constexpr double kP1XStar = 8.58511746580782;

inline double rel(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

template <class Rng>
double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Random parameters in the free-boundary regime. kappa is drawn first and
// beta solved for, so the regime holds by construction.
template <class Rng>
ModelParams draw_main(Rng& rng) {
  ModelParams m;
  m.r = uniform(rng, 0.01, 0.05);
  m.mu = uniform(rng, 0.02, 0.08);
  m.sigma = uniform(rng, 0.15, 0.35);
  m.p = uniform(rng, 0.2, 0.7);
  const double theta = m.mu * m.mu / (2 * m.sigma * m.sigma * (1 - m.p));
  const double kappa = m.r + uniform(rng, 0.02, 0.12);
  m.k = (kappa - m.r) * uniform(rng, 0.1, 0.9);
  m.ell = uniform(rng, 0.2, 5.0);
  m.beta = kappa * (1 - m.p) + m.p * (theta + m.r);
  return m;
}

// Merton-equivalent draws (k >= kappa > 0).
template <class Rng>
ModelParams draw_merton(Rng& rng) {
  ModelParams m = draw_main(rng);
  const double theta = m.mu * m.mu / (2 * m.sigma * m.sigma * (1 - m.p));
  const double kappa = (m.beta - m.p * (theta + m.r)) / (1 - m.p);
  m.k = kappa * uniform(rng, 1.0, 3.0);
  return m;
}

// Proportional-cap draws (ell = 0, 0 < k < kappa).
template <class Rng>
ModelParams draw_homogeneous(Rng& rng) {
  ModelParams m = draw_main(rng);
  m.ell = 0.0;
  return m;
}

}  // namespace capcon::testing
