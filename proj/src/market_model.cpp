#include "capcon/market_model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "capcon/error.hpp"

namespace capcon {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "INVALID_PARAMETER";
    case ErrorCode::IllPosed: return "ILL_POSED";
    case ErrorCode::Unsupported: return "UNSUPPORTED";
    case ErrorCode::RegimeMismatch: return "REGIME_MISMATCH";
    case ErrorCode::Domain: return "DOMAIN";
    case ErrorCode::BracketFailure: return "BRACKET_FAILURE";
    case ErrorCode::NoSignChange: return "NO_SIGN_CHANGE";
    case ErrorCode::NonConvergence: return "NON_CONVERGENCE";
    case ErrorCode::ConcavityLoss: return "CONCAVITY_LOSS";
    case ErrorCode::PolicyViolation: return "POLICY_VIOLATION";
    case ErrorCode::Extrapolation: return "EXTRAPOLATION";
    case ErrorCode::Numerical: return "NUMERICAL";
    case ErrorCode::Io: return "IO";
  }
  return "UNKNOWN";
}

const char* to_string(Regime regime) {
  switch (regime) {
    case Regime::IllPosed: return "ILL_POSED";
    case Regime::MertonEquivalent: return "MERTON_EQUIVALENT";
    case Regime::Homogeneous: return "HOMOGENEOUS";
    case Regime::Main: return "MAIN";
    case Regime::Unsupported: return "UNSUPPORTED";
  }
  return "UNKNOWN";
}

namespace {

void require(bool ok, const char* invariant, double value) {
  if (ok) return;
  std::ostringstream msg;
  msg.precision(17);
  msg << "invalid parameter: " << invariant << " violated (got " << value
      << ")";
  throw Error(ErrorCode::InvalidParameter, msg.str());
}

}  // namespace

std::vector<double> tail_series(const ModelParams& m,
                                const DerivedConstants& c, int terms) {
  // With V = x^p A(z), z = 1/x, the capped HJB reads
  //   beta A = k^p (1 + (ell/k) z)^p / p - (k + ell z) P + r P - h P^2 / Q,
  // P_n = (p-n) a_n, Q_n = (p-n)(p-n-1) a_n. Order n is linear in a_n once
  // S = P^2 / Q is split into its a_n part and the rest.
  const double p = m.p;
  const double h = c.half_sharpe_sq;
  std::vector<double> a, P, Q, S;
  a.push_back(c.a_inf);
  P.push_back(p * c.a_inf);
  Q.push_back(p * (p - 1.0) * c.a_inf);
  S.push_back(P[0] * P[0] / Q[0]);
  double binom = std::pow(m.k, p) / p;  // k^p/p * C(p, n) (ell/k)^n
  for (int n = 1; n < terms; ++n) {
    binom *= (p - (n - 1)) / n * (m.ell / m.k);
    double rest = 0.0;
    for (int j = 1; j < n; ++j) rest += P[j] * P[n - j] - S[j] * Q[n - j];
    rest /= Q[0];
    const double pn = p - n;
    const double alpha = (2.0 * P[0] * pn - S[0] * pn * (pn - 1.0)) / Q[0];
    const double den = m.beta + (m.k - m.r) * pn + h * alpha;
    if (!(std::abs(den) > 1e-12 * m.beta)) break;
    const double an = (binom - m.ell * P[n - 1] - h * rest) / den;
    if (!std::isfinite(an)) break;
    a.push_back(an);
    P.push_back(pn * an);
    Q.push_back(pn * (pn - 1.0) * an);
    S.push_back(alpha * an + rest);
  }
  return a;
}

void validate(const ModelParams& m) {
  require(std::isfinite(m.r) && m.r > 0, "r > 0", m.r);
  require(std::isfinite(m.sigma) && m.sigma > 0, "sigma > 0", m.sigma);
  require(std::isfinite(m.mu) && m.mu > 0, "mu > 0", m.mu);
  require(std::isfinite(m.beta) && m.beta > 0, "beta > 0", m.beta);
  require(std::isfinite(m.p) && m.p > 0 && m.p < 1, "0 < p < 1", m.p);
  require(std::isfinite(m.k) && m.k >= 0, "k >= 0", m.k);
  require(std::isfinite(m.ell) && m.ell >= 0, "ell >= 0", m.ell);
  require(m.k + m.ell > 0, "k + ell > 0", m.k + m.ell);
}

double characteristic(const ModelParams& m, double theta, double lambda) {
  return theta * lambda * (lambda - 1.0) +
         (m.r - m.beta + m.p * theta) * lambda + m.r * (m.p - 1.0);
}

Regime classify(const ModelParams& m, const DerivedConstants& c) {
  if (!(c.kappa > 0)) return Regime::IllPosed;
  if (m.k >= c.kappa) return Regime::MertonEquivalent;
  if (m.k == 0) return Regime::Unsupported;
  if (m.ell == 0) return Regime::Homogeneous;
  if (c.kappa >= m.k + m.r) return Regime::Main;
  return Regime::Unsupported;
}

DerivedConstants derive(const ModelParams& m) {
  validate(m);
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  const double p = m.p;

  DerivedConstants c;
  c.half_sharpe_sq = m.mu * m.mu / (2.0 * m.sigma * m.sigma);
  c.theta = c.half_sharpe_sq / (1.0 - p);
  c.kappa = (m.beta - p * (c.theta + m.r)) / (1.0 - p);
  c.merton_fraction = m.mu / (m.sigma * m.sigma * (1.0 - p));

  // Stable quadratic roots: the larger-magnitude root first, the other from
  // the product r(p-1)/theta.
  const double qa = c.theta;
  const double qb = m.r - m.beta + p * c.theta - c.theta;
  const double qc = m.r * (p - 1.0);
  const double disc = std::sqrt(qb * qb - 4.0 * qa * qc);
  const double q = -0.5 * (qb + std::copysign(disc, qb));
  const double r1 = q / qa;
  const double r2 = qc / q;
  c.lambda_plus = std::max(r1, r2);
  c.lambda_minus = std::min(r1, r2);

  if (m.r > m.k) c.x_e = m.ell / (m.r - m.k);

  const double denom = c.kappa * (1.0 - p) + m.k * p;
  if (c.kappa > 0 && m.k > 0) {
    c.eta = std::pow(m.k / denom, 1.0 / (p - 1.0)) * c.kappa;
  } else if (c.kappa > 0) {
    c.eta = std::numeric_limits<double>::infinity();
  } else {
    c.eta = nan;
  }
  c.a_inf = denom > 0 ? std::pow(m.k, p) / (p * denom) : nan;
  if (c.kappa > m.k && m.k > 0) {
    const double gap = (c.kappa - m.k) * (1.0 - p);
    c.a_1 = m.ell * std::pow(m.k, p - 1.0) * gap / (denom * (gap + m.r));
  }

  if (c.kappa > m.k && m.k > 0) c.tail = tail_series(m, c, 40);

  c.regime = classify(m, c);
  std::ostringstream why;
  switch (c.regime) {
    case Regime::IllPosed:
      why << "kappa = " << c.kappa << " <= 0: the optimal value is infinite";
      break;
    case Regime::MertonEquivalent:
      why << "k >= kappa: the cap never binds, Merton policy is optimal";
      break;
    case Regime::Homogeneous:
      why << "ell = 0 and 0 < k < kappa: homogeneous closed form";
      break;
    case Regime::Main:
      why << "kappa > k > 0, ell > 0 and kappa >= k + r: free boundary";
      break;
    case Regime::Unsupported:
      if (m.k == 0) {
        why << "k = 0 with ell > 0 is not handled by this solver";
      } else {
        why << "kappa = " << c.kappa << " < k + r = " << m.k + m.r
            << ": region structure is an open problem";
      }
      break;
  }
  c.diagnostic = why.str();
  return c;
}

Bracket free_boundary_bracket(const ModelParams& m, const DerivedConstants& c) {
  if (c.regime != Regime::Main) {
    throw Error(ErrorCode::RegimeMismatch,
                std::string("free-boundary bracket requires MAIN regime, got ") +
                    to_string(c.regime));
  }
  return {m.ell / (c.eta - m.k), m.ell / (c.kappa - m.k)};
}

}  // namespace capcon
