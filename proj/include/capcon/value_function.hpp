#pragma once

#include <memory>
#include <optional>

#include "capcon/closed_forms.hpp"
#include "capcon/free_boundary.hpp"
#include "capcon/market_model.hpp"

namespace capcon {

enum class Region { U, C };

const char* to_string(Region region);

struct ValuePoint {
  double x = 0.0;
  double v = 0.0;
  double vx = 0.0;
  double vxx = 0.0;
  Region region = Region::U;
  bool one_sided = false;  // V_xx is the left limit (x at x_e)
};

/// Global value function and feedback policy. For the free-boundary regime
/// it is assembled from a ValueSolution: closed-form map below x_star, dual
/// trajectory above. The Merton-equivalent and proportional-cap regimes use
/// their closed forms directly.
class ValueFunction {
 public:
  explicit ValueFunction(ValueSolution solution);
  /// Closed-form regimes only; throws RegimeMismatch for MAIN and the
  /// regime's own error for ILL_POSED / UNSUPPORTED.
  explicit ValueFunction(const Model& model);

  const Model& model() const noexcept { return model_; }
  const ValueSolution* solution() const noexcept {
    return solution_ ? &*solution_ : nullptr;
  }
  /// Free boundary; +inf when consumption never hits the cap, 0 when it
  /// always does.
  double x_star() const noexcept { return x_star_; }
  /// Largest wealth covered without extrapolation.
  double x_limit() const noexcept { return x_limit_; }

  Region region(double x) const;
  ValuePoint evaluate(double x) const;
  double value(double x) const { return evaluate(x).v; }
  double derivative(double x) const { return evaluate(x).vx; }
  double second_derivative(double x) const { return evaluate(x).vxx; }

  /// Optimal feedback controls. Consumption is the unconstrained map's
  /// inverse below x_star and the cap above. The allocation maximizes the
  /// HJB, -mu V_x / (sigma^2 V_xx); it is proportional to wealth only in the
  /// closed-form regimes. Beyond the integrated range it falls back to the
  /// large-wealth limit merton_fraction * x.
  PolicyPoint policy(double x) const;

  /// HJB residual beta V - max_pi(...) - max_c(...) with the assembled
  /// derivatives and the capped optimal controls.
  double hjb_residual(const ValuePoint& point) const;

 private:
  ValuePoint evaluate_c(double x) const;

  Model model_;
  std::optional<ValueSolution> solution_;
  double x_star_ = 0.0;
  double x_limit_ = 0.0;
};

/// One-sided V_x / V_xx at the free boundary from both sides.
struct Pasting {
  double vx_left = 0.0;
  double vx_right = 0.0;
  double vxx_left = 0.0;
  double vxx_right = 0.0;
};

Pasting pasting_at_boundary(const ValueFunction& vf);

}  // namespace capcon
