#pragma once

#include <optional>
#include <string>
#include <vector>

namespace capcon {

/// Market, preference and consumption-cap inputs. Rates are per unit time,
/// `mu` is the excess return of the risky asset over `r`.
struct ModelParams {
  double r = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
  double beta = 0.0;
  double p = 0.0;
  double k = 0.0;
  double ell = 0.0;
};

enum class Regime {
  IllPosed,          // kappa <= 0: value is infinite
  MertonEquivalent,  // k >= kappa > 0: the cap never binds
  Homogeneous,       // ell = 0, 0 < k < kappa: closed form
  Main,              // kappa > k > 0, ell > 0, kappa >= k + r: free boundary
  Unsupported,       // kappa < k + r, or k = 0 with ell > 0
};

const char* to_string(Regime regime);

struct DerivedConstants {
  double theta = 0.0;            // mu^2 / (2 sigma^2 (1-p))
  double kappa = 0.0;            // Merton consumption-to-wealth ratio
  double eta = 0.0;              // lower bracket slope; +inf when k = 0
  double merton_fraction = 0.0;  // optimal risky allocation per unit wealth
  double lambda_plus = 0.0;      // larger root of the X(c) characteristic
  double lambda_minus = 0.0;
  std::optional<double> x_e;     // ell / (r - k) when r > k
  double a_inf = 0.0;            // k^p / (p (kappa(1-p) + k p))
  double a_1 = 0.0;              // next-order coefficient of the x^{p-1} tail term
  double half_sharpe_sq = 0.0;   // mu^2 / (2 sigma^2)
  /// Coefficients a_n of the large-wealth series V ~ x^p sum_n a_n x^{-n} on
  /// the capped branch; a_0 = a_inf, a_1 as above. Empty unless kappa > k > 0.
  std::vector<double> tail;
  Regime regime = Regime::IllPosed;
  std::string diagnostic;        // human-readable reason for the regime tag
};

/// Throws Error(InvalidParameter) naming the first violated invariant.
void validate(const ModelParams& params);

/// Characteristic polynomial theta*l*(l-1) + (r - beta + p*theta)*l + r(p-1).
double characteristic(const ModelParams& params, double theta, double lambda);

Regime classify(const ModelParams& params, const DerivedConstants& consts);

/// Series coefficients for the capped-branch value at large wealth, solved
/// order by order from the HJB. Stops early at a resonant order.
std::vector<double> tail_series(const ModelParams& params,
                                const DerivedConstants& consts, int terms);

/// Validates, evaluates every derived constant and assigns the regime.
DerivedConstants derive(const ModelParams& params);

/// Lower and upper ends of the interval that must contain the free boundary.
struct Bracket {
  double lower = 0.0;
  double upper = 0.0;
};

Bracket free_boundary_bracket(const ModelParams& params,
                              const DerivedConstants& consts);

}  // namespace capcon

namespace capcon {

/// Inputs together with everything derived from them.
struct Model {
  ModelParams params;
  DerivedConstants consts;
};

inline Model make_model(const ModelParams& params) {
  return Model{params, derive(params)};
}

}  // namespace capcon
