#include "capcon/value_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "capcon/error.hpp"

namespace capcon {

const char* to_string(Region region) {
  return region == Region::U ? "U" : "C";
}

namespace {

void require_closed_form(const Model& model) {
  switch (model.consts.regime) {
    case Regime::MertonEquivalent:
    case Regime::Homogeneous:
      return;
    case Regime::IllPosed:
      throw Error(ErrorCode::IllPosed, model.consts.diagnostic);
    case Regime::Unsupported:
      throw Error(ErrorCode::Unsupported, model.consts.diagnostic);
    case Regime::Main:
      break;
  }
  throw Error(ErrorCode::RegimeMismatch,
              "MAIN regime needs a solved free boundary");
}

// Cubic Hermite on s in [0, 1] with end slopes d0, d1 (already scaled by
// the interval length).
struct Hermite {
  double a, b, d0, d1;

  double at(double s) const {
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * a + (s3 - 2 * s2 + s) * d0 +
           (-2 * s3 + 3 * s2) * b + (s3 - s2) * d1;
  }
  double slope(double s) const {
    const double s2 = s * s;
    return (6 * s2 - 6 * s) * a + (3 * s2 - 4 * s + 1) * d0 +
           (-6 * s2 + 6 * s) * b + (3 * s2 - 2 * s) * d1;
  }
};

// Fritsch-Carlson limiter: keeps the cubic monotone between the nodes.
void limit_slopes(double delta, double& d0, double& d1) {
  if (delta == 0) {
    d0 = d1 = 0;
    return;
  }
  double alpha = d0 / delta;
  double beta = d1 / delta;
  if (alpha < 0) alpha = 0;
  if (beta < 0) beta = 0;
  const double r2 = alpha * alpha + beta * beta;
  if (r2 > 9) {
    const double tau = 3 / std::sqrt(r2);
    alpha *= tau;
    beta *= tau;
  }
  d0 = alpha * delta;
  d1 = beta * delta;
}

}  // namespace

ValueFunction::ValueFunction(ValueSolution solution)
    : model_(solution.model), solution_(std::move(solution)) {
  x_star_ = solution_->x_star;
  const auto& tr = solution_->trajectory;
  x_limit_ = tr.empty() ? x_star_ : -tr.vy.back();
}

ValueFunction::ValueFunction(const Model& model) : model_(model) {
  require_closed_form(model);
  x_limit_ = std::numeric_limits<double>::infinity();
  x_star_ = model.consts.regime == Regime::MertonEquivalent
                ? std::numeric_limits<double>::infinity()
                : 0.0;
}

Region ValueFunction::region(double x) const {
  if (!(x > 0)) {
    std::ostringstream msg;
    msg << "region needs x > 0 (got " << x << ")";
    throw Error(ErrorCode::Domain, msg.str());
  }
  return x < x_star_ ? Region::U : Region::C;
}

ValuePoint ValueFunction::evaluate(double x) const {
  if (!(x >= 0) || !std::isfinite(x)) {
    std::ostringstream msg;
    msg << "value function needs finite x >= 0 (got " << x << ")";
    throw Error(ErrorCode::Domain, msg.str());
  }
  const double inf = std::numeric_limits<double>::infinity();
  if (x == 0) return {0.0, 0.0, inf, -inf, Region::U, false};

  const ModelParams& m = model_.params;
  const double p = m.p;
  if (!solution_) {
    const double kappa = model_.consts.kappa;
    const double a = model_.consts.regime == Regime::MertonEquivalent
                         ? std::pow(kappa, p - 1) / p
                         : homogeneous_coefficient(m, kappa);
    const double xp = power_of(x, p);
    return {x, a * xp, a * p * xp / x, a * p * (p - 1) * xp / (x * x),
            region(x), false};
  }
  if (x < x_star_) {
    const UMap& um = solution_->umap;
    const UValue u = value_on_u(model_, um, um.c_of_x(x));
    return {x, u.v, u.vx, u.vxx, Region::U, false};
  }
  return evaluate_c(x);
}

ValuePoint ValueFunction::evaluate_c(double x) const {
  const ModelParams& m = model_.params;
  const DualTrajectory& tr = solution_->trajectory;
  const std::size_t n = tr.size();
  if (n == 0 || x > x_limit_) {
    std::ostringstream msg;
    msg.precision(10);
    msg << "x = " << x << " lies beyond the integrated range (up to "
        << x_limit_ << ")";
    throw ExtrapolationError(msg.str(), model_.consts.a_inf * power_of(x, m.p));
  }
  ValuePoint out;
  out.x = x;
  out.region = Region::C;
  if (model_.consts.x_e && std::abs(x - *model_.consts.x_e) <=
                               1e-9 * *model_.consts.x_e) {
    out.one_sided = true;
  }

  // First node with -vy >= x.
  const auto it = std::lower_bound(tr.vy.begin(), tr.vy.end(), -x,
                                   [](double vy, double target) {
                                     return vy > target;
                                   });
  std::size_t j = static_cast<std::size_t>(it - tr.vy.begin());
  if (j == 0 || n == 1) {
    out.v = tr.v[0] + tr.y[0] * x;
    out.vx = tr.y[0];
    out.vxx = -1.0 / tr.vyy[0];
    return out;
  }
  const std::size_t i = j - 1;
  const double t0 = std::log(tr.y[i]);
  const double t1 = std::log(tr.y[j]);
  const double h = t1 - t0;

  Hermite w{tr.vy[i], tr.vy[j], h * tr.y[i] * tr.vyy[i],
            h * tr.y[j] * tr.vyy[j]};
  limit_slopes(w.b - w.a, w.d0, w.d1);
  const Hermite v{tr.v[i], tr.v[j], h * tr.y[i] * tr.vy[i],
                  h * tr.y[j] * tr.vy[j]};

  // w is decreasing in s; solve w(s) = -x by safeguarded Newton.
  double lo = 0.0, hi = 1.0;
  double s = (w.a + x) / (w.a - w.b);
  s = std::clamp(s, 0.0, 1.0);
  for (int iter = 0; iter < 100; ++iter) {
    const double g = w.at(s) + x;
    if (g > 0) lo = s; else hi = s;
    const double dg = w.slope(s);
    double next = dg < 0 ? s - g / dg : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 1e-15 || hi - lo <= 1e-15) {
      s = next;
      break;
    }
    s = next;
  }

  const double y = std::exp(t0 + s * h);
  const double vv = v.at(s);
  double vyy = dual_vyy(model_, y, vv, -x);
  if (!(vyy > 0)) {
    // Only reachable next to y_e, where the integrator floored v_yy.
    vyy = 1e-14 * x / y;
  }
  out.v = vv + y * x;
  out.vx = y;
  out.vxx = -1.0 / vyy;
  return out;
}

PolicyPoint ValueFunction::policy(double x) const {
  if (!(x > 0)) return {0.0, 0.0};
  const ModelParams& m = model_.params;
  const double pi = model_.consts.merton_fraction * x;
  if (!solution_) {
    const double rate = model_.consts.regime == Regime::MertonEquivalent
                            ? model_.consts.kappa
                            : std::min(model_.consts.kappa, m.k);
    return {rate * x, pi};
  }
  if (x < x_star_) {
    const UMap& um = solution_->umap;
    const double c = um.c_of_x(x);
    return {c, model_.consts.merton_fraction * c * um.dx_dc(c)};
  }
  const double c = m.k * x + m.ell;
  if (x > x_limit_) return {c, pi};  // pi / x -> merton fraction
  const ValuePoint pt = evaluate_c(x);
  return {c, -m.mu * pt.vx / (m.sigma * m.sigma * pt.vxx)};
}

double ValueFunction::hjb_residual(const ValuePoint& pt) const {
  const ModelParams& m = model_.params;
  const double c = std::min(std::pow(pt.vx, 1.0 / (m.p - 1.0)),
                            m.k * pt.x + m.ell);
  const double invest =
      -model_.consts.half_sharpe_sq * pt.vx * pt.vx / pt.vxx;
  const double consume = std::pow(c, m.p) / m.p - c * pt.vx;
  return m.beta * pt.v - m.r * pt.x * pt.vx - invest - consume;
}

Pasting pasting_at_boundary(const ValueFunction& vf) {
  const ValueSolution* sol = vf.solution();
  if (!sol) {
    throw Error(ErrorCode::RegimeMismatch,
                "pasting needs a free-boundary solution");
  }
  const double xs = sol->x_star;
  const ValuePoint left = vf.evaluate(xs * (1 - 1e-10));
  const ValuePoint right = vf.evaluate(xs);
  return {left.vx, right.vx, left.vxx, right.vxx};
}

}  // namespace capcon
