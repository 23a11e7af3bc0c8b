#include "capcon/closed_forms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "capcon/error.hpp"

namespace capcon {

namespace {

void require_wealth(double x) {
  if (!(x >= 0) || !std::isfinite(x)) {
    std::ostringstream msg;
    msg << "wealth must be finite and nonnegative, got " << x;
    throw Error(ErrorCode::Domain, msg.str());
  }
}

void require_well_posed(const DerivedConstants& c) {
  if (!(c.kappa > 0)) {
    throw Error(ErrorCode::IllPosed,
                "kappa <= 0: the unconstrained value is infinite");
  }
}

void require_homogeneous(const Model& model) {
  require_well_posed(model.consts);
  if (model.params.ell != 0 || !(model.params.k > 0)) {
    throw Error(ErrorCode::RegimeMismatch,
                "homogeneous closed form needs ell = 0 and k > 0");
  }
}

}  // namespace

double power_of(double x, double p) {
  if (x == 0) return 0.0;
  return std::exp(p * std::log(x));
}

double merton_value(const Model& model, double x) {
  require_well_posed(model.consts);
  require_wealth(x);
  const double p = model.params.p;
  return std::pow(model.consts.kappa, p - 1.0) * power_of(x, p) / p;
}

PolicyPoint merton_policy(const Model& model, double x) {
  require_wealth(x);
  return {model.consts.kappa * x, model.consts.merton_fraction * x};
}

double homogeneous_coefficient(const ModelParams& params, double kappa) {
  const double p = params.p;
  const double rate = std::min(kappa, params.k);
  return std::pow(rate, p) / (p * (kappa * (1.0 - p) + rate * p));
}

double homogeneous_value(const Model& model, double x) {
  require_homogeneous(model);
  require_wealth(x);
  return homogeneous_coefficient(model.params, model.consts.kappa) *
         power_of(x, model.params.p);
}

PolicyPoint homogeneous_policy(const Model& model, double x) {
  require_homogeneous(model);
  require_wealth(x);
  const double rate = std::min(model.consts.kappa, model.params.k);
  return {rate * x, model.consts.merton_fraction * x};
}

}  // namespace capcon
