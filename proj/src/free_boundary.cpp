#include "capcon/free_boundary.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "capcon/error.hpp"
#include "capcon/ode.hpp"

namespace capcon {

const char* to_string(DualEvent event) {
  switch (event) {
    case DualEvent::YeCrossing: return "YE_CROSSING";
    case DualEvent::VyyFloor: return "VYY_FLOOR";
    case DualEvent::BranchViolation: return "BRANCH_VIOLATION";
    case DualEvent::ConvexityLoss: return "CONVEXITY_LOSS";
    case DualEvent::StepFailure: return "STEP_FAILURE";
  }
  return "UNKNOWN";
}

const char* to_string(DualStatus status) {
  switch (status) {
    case DualStatus::Completed: return "COMPLETED";
    case DualStatus::BranchViolation: return "BRANCH_VIOLATION";
    case DualStatus::ConvexityLoss: return "CONVEXITY_LOSS";
    case DualStatus::StepFailure: return "STEP_FAILURE";
  }
  return "UNKNOWN";
}

namespace {

constexpr double kYeNeighborhood = 1e-6;  // relative to ell
constexpr double kVyyFloor = 1e-14;       // relative to |v_y| / y
constexpr double kBranchSlack = 1e-10;

struct Capped {
  const Model& model;

  double raw_vyy(double y, double v, double vy) const {
    const ModelParams& m = model.params;
    const double d = m.ell - m.k * vy;
    const double num = m.beta * (v - y * vy) + y * d + m.r * y * vy -
                       std::pow(d, m.p) / m.p;
    return num / (model.consts.half_sharpe_sq * y * y);
  }

  // Signed distance from the y_e line, (k - r) v_y - ell.
  double ye_gap(double vy) const {
    return (model.params.k - model.params.r) * vy - model.params.ell;
  }

  bool near_ye(double vy) const {
    return model.params.r > model.params.k &&
           std::abs(ye_gap(vy)) <= kYeNeighborhood * model.params.ell;
  }

  double floored_vyy(double y, double v, double vy, bool* floored) const {
    const double raw = raw_vyy(y, v, vy);
    const double eps = kVyyFloor * std::abs(vy) / y;
    if (near_ye(vy) && !(raw > eps)) {
      if (floored) *floored = true;
      return eps;
    }
    if (floored) *floored = false;
    return raw;
  }
};

}  // namespace

double dual_vyy(const Model& model, double y, double v, double vy) {
  return Capped{model}.raw_vyy(y, v, vy);
}

DualTrajectory integrate_dual(const Model& model, double y_start, double v0,
                              double vy0, double y_min,
                              const IntegratorOptions& options) {
  if (!(y_min > 0) || !(y_start > y_min)) {
    std::ostringstream msg;
    msg << "integrate_dual needs y_start > y_min > 0 (got " << y_start << ", "
        << y_min << ")";
    throw Error(ErrorCode::Domain, msg.str());
  }
  if (!(vy0 < 0) || !std::isfinite(v0)) {
    throw Error(ErrorCode::Domain,
                "integrate_dual needs vy0 < 0 (a concave increasing primal)");
  }
  const ModelParams& m = model.params;
  const Capped eq{model};

  DualTrajectory traj;
  auto rhs = [&](double t, const ode::State<2>& s) {
    const double y = std::exp(t);
    return ode::State<2>{y * s[1], y * eq.floored_vyy(y, s[0], s[1], nullptr)};
  };

  const bool has_ye = m.r > m.k;
  double prev_t = 0.0;
  double prev_gap = 0.0;
  bool have_prev = false;

  auto observe = [&](double t, const ode::State<2>& s,
                     const ode::State<2>&) -> bool {
    const double y = std::exp(t);
    const double v = s[0];
    const double vy = s[1];
    const double x = -vy;

    if (has_ye) {
      const double gap = eq.ye_gap(vy);
      if (have_prev && ((prev_gap < 0) != (gap < 0))) {
        const double w = prev_gap / (prev_gap - gap);
        const double te = prev_t + w * (t - prev_t);
        traj.events.push_back(
            {DualEvent::YeCrossing, std::exp(te), m.ell / (m.r - m.k)});
      }
      prev_gap = gap;
    }
    prev_t = t;
    have_prev = true;

    bool floored = false;
    const double vyy = eq.floored_vyy(y, v, vy, &floored);
    if (!(vyy > 0)) {
      traj.status = DualStatus::ConvexityLoss;
      traj.events.push_back({DualEvent::ConvexityLoss, y, x});
      return false;
    }
    if (floored) {
      if (traj.events.empty() || traj.events.back().kind != DualEvent::VyyFloor)
        traj.events.push_back({DualEvent::VyyFloor, y, x});
    }
    const double d = m.ell - m.k * vy;
    const double uncapped = std::pow(y, 1.0 / (m.p - 1.0));
    if (uncapped < d * (1.0 - kBranchSlack)) {
      traj.status = DualStatus::BranchViolation;
      traj.events.push_back({DualEvent::BranchViolation, y, x});
      return false;
    }
    traj.y.push_back(y);
    traj.v.push_back(v);
    traj.vy.push_back(vy);
    traj.vyy.push_back(vyy);
    return true;
  };

  ode::StepControl ctl;
  ctl.rtol = options.rtol;
  ctl.max_steps = options.max_steps;
  ctl.max_step = options.max_log_step;
  ctl.initial_step = std::min(0.01, std::log(y_start / y_min));
  ode::Stats stats;
  const ode::Status st =
      ode::integrate<2>(rhs, std::log(y_start), ode::State<2>{v0, vy0},
                        std::log(y_min), ctl, observe, &stats);
  traj.rejected_steps = stats.rejected;
  if (st == ode::Status::StepUnderflow || st == ode::Status::TooManySteps) {
    traj.status = DualStatus::StepFailure;
    const double y = traj.empty() ? y_start : traj.y.back();
    const double x = traj.empty() ? -vy0 : -traj.vy.back();
    traj.events.push_back({DualEvent::StepFailure, y, x});
  }
  return traj;
}

namespace {

struct Tail {
  double v = 0.0, vx = 0.0, vxx = 0.0;
};

// Partial sums of the large-wealth series, stopped once terms are negligible.
Tail tail_sum(const Model& model, double x) {
  const double p = model.params.p;
  const auto& a = model.consts.tail;
  Tail t;
  if (a.empty()) {
    t.v = model.consts.a_inf * std::pow(x, p);
    t.vx = p * t.v / x;
    t.vxx = (p - 1.0) * t.vx / x;
    return t;
  }
  const double z = 1.0 / x;
  double zn = std::pow(x, p);  // x^{p-n}
  for (std::size_t n = 0; n < a.size(); ++n) {
    const double pn = p - static_cast<double>(n);
    const double term = a[n] * zn;
    t.v += term;
    t.vx += pn * term * z;
    t.vxx += pn * (pn - 1.0) * term * z * z;
    if (n >= 2 && std::abs(term) <= 1e-17 * std::abs(t.v)) break;
    zn *= z;
  }
  return t;
}

}  // namespace

double asymptotic_value(const Model& model, double x) {
  return tail_sum(model, x).v;
}

double asymptotic_marginal(const Model& model, double x) {
  return tail_sum(model, x).vx;
}

double tail_radius(const Model& model) {
  // Geometric mean of the coefficient ratios over the second half; single
  // ratios oscillate too much to be useful.
  const auto& a = model.consts.tail;
  const std::size_t n = a.size();
  if (n < 4 || a[n / 2] == 0 || a[n - 1] == 0) return 0.0;
  return std::pow(std::abs(a[n - 1] / a[n / 2]),
                  1.0 / static_cast<double>(n - 1 - n / 2));
}

double asymptotic_wealth(const Model& model, double y) {
  const double p = model.params.p;
  const double lead = std::pow(y / (p * model.consts.a_inf), 1.0 / (p - 1.0));
  if (model.consts.tail.size() < 2) return lead;
  // Newton in log x on log(marginal) - log(y).
  double z = std::log(lead);
  for (int it = 0; it < 60; ++it) {
    const double x = std::exp(z);
    const Tail t = tail_sum(model, x);
    if (!(t.vx > 0) || !(t.vxx < 0)) return lead;
    const double step = (std::log(t.vx) - std::log(y)) / (x * t.vxx / t.vx);
    z -= step;
    if (std::abs(step) < 1e-15) break;
  }
  return std::exp(z);
}

double tail_growth_exponent(const Model& model) {
  // Linearize the dual ODE about v ~ y^{p/(p-1)}: a perturbation y^q solves
  // A q^2 - b q - beta = 0; the negative root grows as y -> 0.
  const ModelParams& m = model.params;
  const DerivedConstants& c = model.consts;
  const double a = c.half_sharpe_sq;
  const double b = a + m.r - m.beta - m.k + c.kappa * (1 - m.p) + m.k * m.p;
  const double q = (b - std::sqrt(b * b + 4 * a * m.beta)) / (2 * a);
  // wealth error ~ y^{q-1}, wealth ~ y^{1/(p-1)}
  return (1 - m.p) * (1 - q) - 1;
}

double shooting_y_min(const Model& model, const ShootingOptions& options) {
  const Bracket br = free_boundary_bracket(model.params, model.consts);
  double reach = options.reach;
  const double e = tail_growth_exponent(model);
  if (e > 0) {
    reach = std::min(reach, std::pow(options.max_amplification, 1 / e));
  }
  reach = std::max(reach, options.min_reach);
  const double x_reach = std::max({reach * br.upper, options.radius_multiple * tail_radius(model),
                                  options.min_reach_wealth});
  return asymptotic_marginal(model, x_reach);
}

Shot shoot(const Model& model, double x_hat, double y_min,
           const IntegratorOptions& options) {
  const UMap umap(model, x_hat);
  Shot shot;
  shot.x_hat = x_hat;
  if (!umap.monotone()) {
    shot.monotone_map = false;
    shot.sentinel = true;
    shot.residual = kResidualBelow;
    shot.status = DualStatus::ConvexityLoss;
    return shot;
  }
  const double c_star = umap.c_star();
  const UValue at = value_on_u(model, umap, c_star);
  const double y_star = at.vx;
  const double v0 = at.v - x_hat * y_star;

  if (!(y_min < y_star)) {
    const double xa = asymptotic_wealth(model, y_star);
    shot.trajectory.y = {y_star};
    shot.trajectory.v = {v0};
    shot.trajectory.vy = {-x_hat};
    shot.trajectory.vyy = {dual_vyy(model, y_star, v0, -x_hat)};
    shot.residual = (x_hat - xa) / xa;
    return shot;
  }

  shot.trajectory = integrate_dual(model, y_star, v0, -x_hat, y_min, options);
  shot.status = shot.trajectory.status;
  switch (shot.status) {
    case DualStatus::Completed: {
      const double xa = asymptotic_wealth(model, y_min);
      shot.residual = (-shot.trajectory.vy.back() - xa) / xa;
      break;
    }
    case DualStatus::BranchViolation:
      shot.sentinel = true;
      shot.residual = kResidualAbove;
      break;
    case DualStatus::ConvexityLoss:
    case DualStatus::StepFailure:
      shot.sentinel = true;
      shot.residual = kResidualBelow;
      break;
  }
  return shot;
}

double shooting_residual(const Model& model, double x_hat, double y_min,
                         const IntegratorOptions& options) {
  return shoot(model, x_hat, y_min, options).residual;
}

namespace {

void require_main(const Model& model) {
  const Regime regime = model.consts.regime;
  if (regime == Regime::Main) return;
  const ErrorCode code = regime == Regime::Unsupported ? ErrorCode::Unsupported
                         : regime == Regime::IllPosed  ? ErrorCode::IllPosed
                                                       : ErrorCode::RegimeMismatch;
  throw Error(code, std::string("free-boundary solve requires MAIN regime (") +
                        to_string(regime) + "): " + model.consts.diagnostic);
}

ValueSolution assemble(const Model& model, Shot&& shot, double y_min,
                       int iterations) {
  const Bracket br = free_boundary_bracket(model.params, model.consts);
  UMap umap(model, shot.x_hat);
  const double y_star = std::pow(umap.c_star(), model.params.p - 1.0);
  return ValueSolution{model,         shot.x_hat, y_star,
                       y_min,         shot.residual, iterations,
                       br,            std::move(umap),
                       std::move(shot.trajectory)};
}

}  // namespace

ValueSolution solve_x_star(const Model& model, const SolveOptions& options) {
  require_main(model);
  const Bracket br = free_boundary_bracket(model.params, model.consts);
  const double y_min = shooting_y_min(model, options.shooting);
  const IntegratorOptions& integ = options.shooting.integrator;

  double lo = br.lower;
  double hi = br.upper;
  const double r_lo = shooting_residual(model, lo, y_min, integ);
  const double r_hi = shooting_residual(model, hi, y_min, integ);
  if ((r_lo < 0) == (r_hi < 0)) {
    std::ostringstream msg;
    msg.precision(10);
    msg << "shooting residual has no sign change on [" << lo << ", " << hi
        << "]: residual(lower) = " << r_lo << ", residual(upper) = " << r_hi;
    throw Error(ErrorCode::NoSignChange, msg.str());
  }
  const bool lo_negative = r_lo < 0;
  const double width = options.tol * (br.upper - br.lower);
  // The residual can be very steep near the root, so bisection continues past
  // the width target until the residual itself is small or the bracket stops
  // shrinking in floating point.
  constexpr double kSettled = 1e-6;
  double best_x = 0.5 * (lo + hi);
  double best_r = INFINITY;
  int iterations = 0;
  while ((hi - lo > width || !(std::abs(best_r) <= kSettled)) &&
         iterations < 400) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    const double r = shooting_residual(model, mid, y_min, integ);
    ++iterations;
    if (std::abs(r) < std::abs(best_r)) {
      best_r = r;
      best_x = mid;
    }
    if (r == 0) {
      lo = hi = mid;
      break;
    }
    if ((r < 0) == lo_negative) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  Shot shot = shoot(model, best_x, y_min, integ);
  if (shot.sentinel || shot.status != DualStatus::Completed ||
      !(std::abs(shot.residual) <= kSettled)) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "free-boundary solve did not settle: x = " << shot.x_hat
        << ", residual = " << shot.residual
        << ", status = " << to_string(shot.status);
    throw Error(ErrorCode::Numerical, msg.str());
  }
  return assemble(model, std::move(shot), y_min, iterations);
}

ValueSolution solution_at(const Model& model, double x_star,
                          const ShootingOptions& options) {
  require_main(model);
  const double y_min = shooting_y_min(model, options);
  Shot shot = shoot(model, x_star, y_min, options.integrator);
  if (!shot.monotone_map) {
    throw Error(ErrorCode::Numerical,
                "X(c) is not monotone for the requested boundary");
  }
  return assemble(model, std::move(shot), y_min, 0);
}

std::vector<ScanPoint> residual_scan(const Model& model, int points,
                                     const ShootingOptions& options) {
  require_main(model);
  const Bracket br = free_boundary_bracket(model.params, model.consts);
  const double y_min = shooting_y_min(model, options);
  std::vector<ScanPoint> out;
  out.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double x = i + 1 == points
                         ? br.upper
                         : br.lower + (br.upper - br.lower) * i / (points - 1);
    const Shot s = shoot(model, x, y_min, options.integrator);
    out.push_back({x, s.residual, s.status, s.monotone_map});
  }
  return out;
}

}  // namespace capcon
