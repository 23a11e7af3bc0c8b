#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "capcon/market_model.hpp"

namespace capcon {

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;  // worst observed statistic
  double limit = 0.0;
  std::string detail;
};

struct VerifyOptions {
  /// Relative perturbation applied to the solved free boundary before the
  /// checks run; 0 verifies the solver's own answer.
  double corrupt_x_star = 0.0;
  int fd_nodes = 4000;
  int bound_points = 1000;
  int hjb_points = 500;
  int scan_points = 16;
};

struct VerifyReport {
  std::string regime;
  double x_star = 0.0;
  std::vector<Check> checks;

  bool passed() const;
  std::vector<std::string> failed() const;
  nlohmann::json to_json() const;
};

/// Runs the invariant suite: value bounds, pasting, HJB residuals, the
/// finite-difference cross-check, the residual-sign scan and, when r > k,
/// the y_e audit. Throws for regimes without a value function.
VerifyReport run_verify(const Model& model, const VerifyOptions& options = {});

}  // namespace capcon
