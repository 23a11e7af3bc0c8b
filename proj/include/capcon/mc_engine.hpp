#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "capcon/closed_forms.hpp"
#include "capcon/market_model.hpp"
#include "capcon/value_function.hpp"

namespace capcon {

/// Feedback map x -> (c, pi). Implementations must be safe to call
/// concurrently.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual PolicyPoint at(double x) const = 0;
  virtual std::string name() const = 0;
};

using PolicyPtr = std::shared_ptr<const Policy>;

/// (kappa x, merton_fraction x).
PolicyPtr make_merton_policy(const Model& model);
/// Optimal policy of the value function. Free-boundary solutions are
/// tabulated (see TabulatedPolicy); closed-form regimes are evaluated exactly.
PolicyPtr make_optimal_policy(const ValueFunction& vf);
/// c -> min(c_factor * c, k x + ell), pi -> pi_factor * pi.
PolicyPtr make_scaled_policy(PolicyPtr base, const Model& model,
                             double c_factor, double pi_factor);
/// No consumption; the allocation of `base` is kept.
PolicyPtr make_zero_consumption_policy(PolicyPtr base);

/// Piecewise cubic Hermite tables of the optimal controls on log-uniform
/// wealth nodes, with exact slopes at every node. Below x_star consumption
/// comes from the inverse of X(c) and the allocation is
/// merton_fraction * c * X'(c); above it consumption is the cap and the
/// allocation (mu / sigma^2) y v_yy is read off the dual trajectory.
class TabulatedPolicy final : public Policy {
 public:
  explicit TabulatedPolicy(const ValueFunction& vf, int nodes_per_side = 4000);
  PolicyPoint at(double x) const override;
  std::string name() const override { return "optimal"; }

 private:
  struct Node {
    double x, c, dc, pi, dpi;
  };
  struct Grid {
    double log_x0 = 0.0, inv_h = 0.0;
    std::vector<Node> nodes;
    PolicyPoint eval(double x) const;
  };
  ModelParams params_;
  double x_star_;
  double pi_slope_far_;  // pi / x beyond the table
  Grid u_, c_;
};

struct SimConfig {
  double x0 = 1.0;
  double dt = 1e-3;
  double horizon = 200.0;
  long n_paths = 200000;
  std::uint64_t seed = 1;
  int threads = 1;
  bool keep_paths = false;  // retain per-path utilities and terminal wealth
};

struct SimEstimate {
  std::string policy;
  double mean = 0.0;
  double std_error = 0.0;
  double truncation_bound = 0.0;
  double absorbed_fraction = 0.0;
  long n_paths = 0;
  long n_steps = 0;
  std::vector<double> path_utility;
  std::vector<double> terminal_wealth;
};

struct PairedDifference {
  std::string reference;
  std::string other;
  double mean = 0.0;       // reference minus other
  double std_error = 0.0;
};

struct Comparison {
  std::vector<SimEstimate> estimates;
  std::vector<PairedDifference> differences;  // policy 0 against each other
};

/// Euler-Maruyama on the wealth SDE with absorption at zero. Path i draws
/// its normals from Philox stream i under key `seed`, and paths are reduced
/// in fixed blocks in index order, so results do not depend on `threads`.
/// Throws PolicyViolation with (t, x, c) when a policy leaves [0, k x + ell].
SimEstimate simulate(const Model& model, const SimConfig& config,
                     const Policy& policy);

/// Runs all policies on common random numbers.
Comparison compare_policies(const Model& model, const SimConfig& config,
                            const std::vector<PolicyPtr>& policies);

/// Quantiles of the per-path discounted utility and terminal wealth, as CSV
/// `q,utility,terminal_wealth`. Needs keep_paths.
void write_path_quantiles(std::ostream& out, const SimEstimate& estimate);

}  // namespace capcon
