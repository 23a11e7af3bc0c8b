#pragma once

#include "capcon/market_model.hpp"

namespace capcon {

/// Closed-form consumption-to-wealth map on the unconstrained region,
///
///   X(c) = c / kappa - (gap / kappa) (c / c_star)^lambda,
///   gap  = (k - kappa) x_star + ell,   c_star = k x_star + ell,
///
/// for a candidate free boundary x_star. X(c_star) = x_star and X(0+) = 0.
class UMap {
 public:
  UMap(const Model& model, double x_star);

  double x_star() const noexcept { return x_star_; }
  double c_star() const noexcept { return c_star_; }
  /// Coefficient of c^lambda; nonnegative on the admissible bracket.
  double coefficient() const noexcept { return b_; }
  double lambda() const noexcept { return lambda_; }

  double x_of_c(double c) const;
  /// Analytic first derivative X'(c).
  double dx_dc(double c) const;
  /// Inverse map, consumption as a function of wealth on (0, x_star].
  double c_of_x(double x) const;

  /// X is strictly increasing on (0, c_star] iff X'(c_star) > 0 (X' is
  /// decreasing in c when the coefficient is nonnegative).
  bool monotone() const { return dx_dc(c_star_) > 0; }

 private:
  double unchecked_x(double c) const;
  double unchecked_dx(double c) const;
  void require_c(double c) const;

  ModelParams params_;
  double kappa_;
  double x_star_;
  double c_star_;
  double gap_;
  double b_;
  double lambda_;
};

UMap build_umap(const Model& model, double x_star_candidate);

struct UValue {
  double x = 0.0;
  double v = 0.0;
  double vx = 0.0;
  double vxx = 0.0;
};

/// V, V_x and V_xx at wealth X(c), obtained from V_x(X(c)) = c^{p-1} and the
/// unconstrained HJB written in the consumption variable.
UValue value_on_u(const Model& model, const UMap& umap, double c);

}  // namespace capcon
