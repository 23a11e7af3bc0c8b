#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "capcon/market_model.hpp"
#include "capcon/unconstrained_region.hpp"

namespace capcon {

enum class DualEvent {
  YeCrossing,       // (k - r) v_y = ell, i.e. -v_y passes x_e
  VyyFloor,         // recovered v_yy floored near y_e
  BranchViolation,  // y^{1/(p-1)} < ell - k v_y: left the capped branch
  ConvexityLoss,    // recovered v_yy <= 0 away from y_e
  StepFailure,      // step size underflow or step budget exhausted
};

const char* to_string(DualEvent event);

struct TrajectoryEvent {
  DualEvent kind;
  double y;
  double x;  // -v_y at the event
};

enum class DualStatus { Completed, BranchViolation, ConvexityLoss, StepFailure };

const char* to_string(DualStatus status);

/// Dual value v(y) = max_x (V(x) - x y) on the capped region, sampled at the
/// accepted integrator steps. y is stored in decreasing order, so wealth
/// -v_y increases along the arrays.
struct DualTrajectory {
  std::vector<double> y;
  std::vector<double> v;
  std::vector<double> vy;
  std::vector<double> vyy;
  std::vector<TrajectoryEvent> events;
  DualStatus status = DualStatus::Completed;
  long rejected_steps = 0;

  std::size_t size() const noexcept { return y.size(); }
  bool empty() const noexcept { return y.empty(); }
};

struct IntegratorOptions {
  double rtol = 1e-8;
  long max_steps = 200000;
  /// Largest step in log y. Keeps the stored grid fine enough for cubic
  /// interpolation of the value function.
  double max_log_step = 0.02;
};

/// Second derivative of v recovered from the capped-branch dual ODE
///   beta (v - y v_y) - (mu^2 / 2 sigma^2) y^2 v_yy + y d + r y v_y - d^p / p = 0,
///   d = ell - k v_y.
double dual_vyy(const Model& model, double y, double v, double vy);

/// Integrates the capped-branch dual ODE from y_start down to y_min in log y.
/// Throws Error(Domain) unless y_start > y_min > 0 and vy0 < 0. Branch and
/// convexity failures stop the integration and are reported in `status` and
/// `events`.
DualTrajectory integrate_dual(const Model& model, double y_start, double v0,
                              double vy0, double y_min,
                              const IntegratorOptions& options = {});

/// Large-wealth expansion of the value, V ~ x^p sum_n a_n x^{-n}, valid
/// beyond tail_radius().
double asymptotic_value(const Model& model, double x);
double asymptotic_marginal(const Model& model, double x);
/// Wealth at which the asymptotic marginal value equals y.
double asymptotic_wealth(const Model& model, double y);
/// Estimated radius of convergence of the series, in wealth.
double tail_radius(const Model& model);

/// Exponent e such that perturbations of the capped-branch dual solution grow
/// like (x / x0)^e relative to wealth as the trajectory moves out along the
/// power-law tail. Nonpositive when nothing grows.
double tail_growth_exponent(const Model& model);

struct ShootingOptions {
  /// Trajectories are integrated until the asymptotic wealth reaches
  /// max(R * upper bracket end, min_reach_wealth), where R is `reach`
  /// lowered so that R^e stays below `max_amplification`, but not below
  /// `min_reach`. The reach never falls below `radius_multiple` times the
  /// series radius.
  double reach = 1e4;
  double min_reach = 2.0;
  double max_amplification = 1e4;
  double radius_multiple = 2.0;
  double min_reach_wealth = 0.0;
  IntegratorOptions integrator;
};

/// Dual variable at which shooting compares against the asymptote.
double shooting_y_min(const Model& model, const ShootingOptions& options = {});

// Residuals for failed shots. A too-small candidate loses convexity (or has a
// non-monotone X(c)); a too-large one leaves the capped branch.
inline constexpr double kResidualBelow = -1e6;
inline constexpr double kResidualAbove = 1e6;

struct Shot {
  double x_hat = 0.0;
  double residual = 0.0;
  bool sentinel = false;
  DualStatus status = DualStatus::Completed;
  bool monotone_map = true;
  DualTrajectory trajectory;
};

/// Integrates from the matching point of candidate x_hat and returns the
/// relative mismatch (-v_y(y_min) - x_asym(y_min)) / x_asym(y_min). Failures
/// map to the signed sentinels above; this never throws for candidates in
/// the bracket.
Shot shoot(const Model& model, double x_hat, double y_min,
           const IntegratorOptions& options = {});

double shooting_residual(const Model& model, double x_hat, double y_min,
                         const IntegratorOptions& options = {});

struct SolveOptions {
  double tol = 1e-10;  // final bisection width relative to the bracket width
  ShootingOptions shooting;
};

struct ValueSolution {
  Model model;
  double x_star = 0.0;
  double y_star = 0.0;
  double y_min = 0.0;
  double residual = 0.0;
  int iterations = 0;
  Bracket bracket;
  UMap umap;
  DualTrajectory trajectory;
};

/// Locates the free boundary by bisection on the shooting residual.
/// Throws NoSignChange if the bracket ends do not straddle a root and
/// Numerical if the final trajectory is not clean.
ValueSolution solve_x_star(const Model& model, const SolveOptions& options = {});

/// Builds the solution object for a fixed boundary without searching;
/// used to audit perturbed boundaries.
ValueSolution solution_at(const Model& model, double x_star,
                          const ShootingOptions& options = {});

struct ScanPoint {
  double x_hat;
  double residual;
  DualStatus status;
  bool monotone_map;
};

/// Evenly spaced residual samples across the bracket, endpoints included.
std::vector<ScanPoint> residual_scan(const Model& model, int points = 16,
                                     const ShootingOptions& options = {});

}  // namespace capcon
