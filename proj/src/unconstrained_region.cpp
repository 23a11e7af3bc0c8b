#include "capcon/unconstrained_region.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "capcon/error.hpp"

namespace capcon {

namespace {

constexpr double kBracketSlack = 1e-12;
constexpr double kDomainSlack = 1e-14;

}  // namespace

UMap::UMap(const Model& model, double x_star)
    : params_(model.params),
      kappa_(model.consts.kappa),
      x_star_(x_star),
      lambda_(model.consts.lambda_plus) {
  if (model.consts.regime != Regime::Main) {
    throw Error(ErrorCode::RegimeMismatch,
                std::string("unconstrained map requires MAIN regime, got ") +
                    to_string(model.consts.regime));
  }
  const Bracket br = free_boundary_bracket(model.params, model.consts);
  const double slack = kBracketSlack * br.upper;
  if (!(x_star >= br.lower - slack && x_star <= br.upper + slack)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "candidate free boundary " << x_star << " outside [" << br.lower
        << ", " << br.upper << "]";
    throw Error(ErrorCode::BracketFailure, msg.str());
  }
  c_star_ = params_.k * x_star_ + params_.ell;
  gap_ = (params_.k - kappa_) * x_star_ + params_.ell;
  // At the upper bracket end the gap vanishes; snap roundoff to exact zero.
  if (std::abs(gap_) <= 1e-14 * params_.ell || gap_ < 0) gap_ = 0.0;
  b_ = gap_ / (kappa_ * std::pow(c_star_, lambda_));
}

void UMap::require_c(double c) const {
  if (!(c > 0) || c > c_star_ * (1.0 + kDomainSlack)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "consumption " << c << " outside (0, " << c_star_ << "]";
    throw Error(ErrorCode::Domain, msg.str());
  }
}

double UMap::unchecked_x(double c) const {
  return (c - gap_ * std::pow(c / c_star_, lambda_)) / kappa_;
}

double UMap::unchecked_dx(double c) const {
  return (1.0 - gap_ * lambda_ * std::pow(c / c_star_, lambda_) / c) / kappa_;
}

double UMap::x_of_c(double c) const {
  require_c(c);
  return unchecked_x(c);
}

double UMap::dx_dc(double c) const {
  require_c(c);
  return unchecked_dx(c);
}

double UMap::c_of_x(double x) const {
  if (!(x > 0) || x > x_star_ * (1.0 + kDomainSlack)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "wealth " << x << " outside (0, " << x_star_ << "]";
    throw Error(ErrorCode::Domain, msg.str());
  }
  if (x >= x_star_) return c_star_;

  // X(c) <= c / kappa, so kappa x is a lower bracket; X(c_star) = x_star is
  // an upper one.
  double lo = kappa_ * x * (1.0 - 1e-12);
  double hi = c_star_;
  if (unchecked_x(lo) > x || unchecked_x(hi) < x) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "c_of_x bracket failure at x = " << x;
    throw Error(ErrorCode::BracketFailure, msg.str());
  }
  double c = std::min(hi, std::max(lo, kappa_ * x));
  for (int it = 0; it < 200; ++it) {
    const double f = unchecked_x(c) - x;
    if (f == 0) return c;
    if (f < 0) {
      lo = c;
    } else {
      hi = c;
    }
    if (hi - lo <= 4 * std::numeric_limits<double>::epsilon() * hi) break;
    const double d = unchecked_dx(c);
    double next = d > 0 ? c - f / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    c = next;
  }
  return c;
}

UMap build_umap(const Model& model, double x_star_candidate) {
  return UMap(model, x_star_candidate);
}

UValue value_on_u(const Model& model, const UMap& umap, double c) {
  const ModelParams& m = model.params;
  const DerivedConstants& k = model.consts;
  const double x = umap.x_of_c(c);
  const double dx = umap.dx_dc(c);
  const double cp = std::pow(c, m.p);
  UValue out;
  out.x = x;
  out.vx = cp / c;
  out.vxx = (m.p - 1.0) * cp / (c * c * dx);
  out.v = (k.theta * cp * dx + m.r * out.vx * x - (m.p - 1.0) / m.p * cp) /
          m.beta;
  return out;
}

}  // namespace capcon
