#pragma once

#include "capcon/market_model.hpp"

namespace capcon {

struct PolicyPoint {
  double c = 0.0;   // consumption rate
  double pi = 0.0;  // wealth held in the risky asset
};

/// x^p evaluated as exp(p log x) with x = 0 mapped to exactly 0.
double power_of(double x, double p);

/// kappa^{p-1} x^p / p. Throws IllPosed when kappa <= 0.
double merton_value(const Model& model, double x);
PolicyPoint merton_policy(const Model& model, double x);

/// Value and policy for a proportional cap (ell = 0, k > 0); the cap rate is
/// min(kappa, k). Throws RegimeMismatch otherwise.
double homogeneous_value(const Model& model, double x);
PolicyPoint homogeneous_policy(const Model& model, double x);

/// Coefficient of x^p in the homogeneous value, for any k > 0.
double homogeneous_coefficient(const ModelParams& params, double kappa);

}  // namespace capcon
