#include "capcon/hjb_fd_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "capcon/closed_forms.hpp"
#include "capcon/error.hpp"
#include "capcon/free_boundary.hpp"

namespace capcon {

namespace {

struct Stencil {
  // first derivative
  std::vector<double> cm, c0, cp;
  // second derivative
  std::vector<double> sm, s0, sp;
  std::vector<double> dm, dp;
};

Stencil make_stencil(const std::vector<double>& x) {
  const std::size_t n = x.size();
  Stencil s;
  for (auto* v : {&s.cm, &s.c0, &s.cp, &s.sm, &s.s0, &s.sp, &s.dm, &s.dp})
    v->assign(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double dm = x[i] - x[i - 1];
    const double dp = x[i + 1] - x[i];
    s.dm[i] = dm;
    s.dp[i] = dp;
    s.cm[i] = -dp / (dm * (dm + dp));
    s.c0[i] = (dp - dm) / (dm * dp);
    s.cp[i] = dm / (dp * (dm + dp));
    s.sm[i] = 2 / (dm * (dm + dp));
    s.s0[i] = -2 / (dm * dp);
    s.sp[i] = 2 / (dp * (dm + dp));
  }
  return s;
}

// Rows (beta + am + ap) V_j - am V_{j-1} - ap V_{j+1} = rhs_j with the
// outer neighbours already folded into rhs. The diagonal margin e_j over
// the off-diagonal sum is carried explicitly so that elimination never
// subtracts nearly equal numbers.
void solve_m_matrix(double beta, const std::vector<double>& am,
                    const std::vector<double>& ap, std::vector<double>& rhs,
                    std::vector<double>& out) {
  const std::size_t m = rhs.size();
  std::vector<double> u(m), e(m);
  e[0] = beta + am[0];
  u[0] = e[0] + ap[0];
  for (std::size_t j = 1; j < m; ++j) {
    e[j] = beta + am[j] * e[j - 1] / u[j - 1];
    u[j] = e[j] + ap[j];
    rhs[j] += am[j] / u[j - 1] * rhs[j - 1];
  }
  out.resize(m);
  out[m - 1] = rhs[m - 1] / u[m - 1];
  for (std::size_t j = m - 1; j-- > 0;) {
    out[j] = (rhs[j] + ap[j] * out[j + 1]) / u[j];
  }
}

}  // namespace

double fd_far_field(const Model& model, double x_max) {
  switch (model.consts.regime) {
    case Regime::Main:
      return asymptotic_value(model, x_max);
    case Regime::Homogeneous:
      return homogeneous_value(model, x_max);
    case Regime::MertonEquivalent:
      return merton_value(model, x_max);
    default:
      break;
  }
  throw Error(ErrorCode::RegimeMismatch,
              std::string("finite-difference oracle does not cover regime ") +
                  to_string(model.consts.regime));
}

FdSolution solve_fd(const Model& model, const FdOptions& options) {
  const ModelParams& m = model.params;
  const DerivedConstants& dc = model.consts;
  const Regime regime = dc.regime;
  if (regime != Regime::Main && regime != Regime::Homogeneous &&
      regime != Regime::MertonEquivalent) {
    fd_far_field(model, 1.0);  // throws
  }
  if (options.n_nodes < 400) {
    throw Error(ErrorCode::InvalidParameter, "n_nodes must be at least 400");
  }
  double x_ref = 10.0;
  double x_max = options.x_max;
  if (regime == Regime::Main) {
    const Bracket br = free_boundary_bracket(m, dc);
    x_ref = br.lower;
    if (x_max == 0) x_max = 1000 * br.upper;
    if (x_max < 5 * br.upper) {
      std::ostringstream msg;
      msg << "x_max must be at least 5 * ell / (kappa - k) = " << 5 * br.upper;
      throw Error(ErrorCode::InvalidParameter, msg.str());
    }
  } else {
    if (x_max == 0) x_max = 1e4;
    x_ref = 1e-3 * x_max;
  }

  const std::size_t n = static_cast<std::size_t>(options.n_nodes);
  FdSolution fd;
  std::vector<double>& x = fd.x_grid;
  x.assign(n, 0.0);
  const double lx0 = std::log(options.x_min_rel * x_ref);
  const double lx1 = std::log(x_max);
  for (std::size_t i = 1; i < n; ++i) {
    x[i] = std::exp(lx0 + (lx1 - lx0) * static_cast<double>(i - 1) /
                              static_cast<double>(n - 2));
  }
  x[n - 1] = x_max;

  const double p = m.p;
  const double mf = dc.merton_fraction;
  const double pi_cap = 10 * mf * x_max;
  const double v_right = fd_far_field(model, x_max);
  const double kappa = dc.kappa;

  std::vector<double>& V = fd.V;
  std::vector<double>& c = fd.c;
  std::vector<double>& pi = fd.pi;
  V.resize(n);
  c.assign(n, 0.0);
  pi.assign(n, 0.0);
  const double a0 = regime == Regime::MertonEquivalent
                        ? std::pow(kappa, p - 1) / p
                        : dc.a_inf;
  for (std::size_t i = 0; i < n; ++i) {
    V[i] = a0 * power_of(x[i], p);
    pi[i] = mf * x[i];
    c[i] = std::min(kappa * x[i], m.k * x[i] + m.ell);
  }
  V[n - 1] = v_right;

  const Stencil st = make_stencil(x);
  const std::size_t rows = n - 2;
  std::vector<double> am(rows), ap(rows), rhs(rows), sol;

  auto coefficients = [&](std::size_t i, double pii, double ci, double& lo,
                          double& up) {
    const double diff = 0.5 * m.sigma * m.sigma * pii * pii;
    const double drift = m.r * x[i] + pii * m.mu - ci;
    lo = diff * st.sm[i] + drift * st.cm[i];
    up = diff * st.sp[i] + drift * st.cp[i];
    if (lo < 0 || up < 0) {
      lo = diff * st.sm[i] + std::max(-drift, 0.0) / st.dm[i];
      up = diff * st.sp[i] + std::max(drift, 0.0) / st.dp[i];
      return false;
    }
    return true;
  };

  bool converged = false;
  for (int it = 0; it < options.max_iterations; ++it) {
    for (std::size_t i = 1; i + 1 < n; ++i) {
      double lo, up;
      coefficients(i, pi[i], c[i], lo, up);
      am[i - 1] = lo;
      ap[i - 1] = up;
      rhs[i - 1] = std::pow(c[i], p) / p;
    }
    rhs[rows - 1] += ap[rows - 1] * v_right;
    solve_m_matrix(m.beta, am, ap, rhs, sol);

    double update = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double nv = sol[i - 1];
      update = std::max(update, std::abs(nv - V[i]) / std::abs(nv));
      V[i] = nv;
    }
    V[0] = 0.0;
    fd.iterations = it + 1;
    fd.final_update = update;
    fd.update_history.push_back(update);
    if (update <= options.tol) {
      converged = true;
      break;
    }

    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double vx = st.cm[i] * V[i - 1] + st.c0[i] * V[i] + st.cp[i] * V[i + 1];
      const double vxx = st.sm[i] * V[i - 1] + st.s0[i] * V[i] + st.sp[i] * V[i + 1];
      const double cap = m.k * x[i] + m.ell;
      auto control = [&](double grad, double& pn, double& cn) {
        pn = vxx < 0 ? std::clamp(-m.mu * grad / (m.sigma * m.sigma * vxx), 0.0,
                                  pi_cap)
                     : pi_cap;
        cn = std::min(std::pow(std::max(grad, 1e-300), 1 / (p - 1)), cap);
      };
      double pn, cn;
      control(vx, pn, cn);
      double lo, up;
      if (!coefficients(i, pn, cn, lo, up)) {
        const double drift = m.r * x[i] + pn * m.mu - cn;
        const double vxu = drift > 0 ? (V[i + 1] - V[i]) / st.dp[i]
                                     : (V[i] - V[i - 1]) / st.dm[i];
        control(vxu, pn, cn);
      }
      pi[i] = pn;
      c[i] = cn;
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "policy iteration did not converge in " << options.max_iterations
        << " iterations (last update " << fd.final_update << ")";
    throw Error(ErrorCode::NonConvergence, msg.str());
  }

  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double left = (V[i] - V[i - 1]) / st.dm[i];
    const double right = (V[i + 1] - V[i]) / st.dp[i];
    if (right < 0 || right > left * (1 + 1e-9)) {
      std::ostringstream msg;
      msg << "discrete concavity or monotonicity lost at node " << i
          << " (x = " << x[i] << ")";
      throw Error(ErrorCode::ConcavityLoss, msg.str());
    }
  }
  return fd;
}

double fd_first_derivative(const FdSolution& fd, std::size_t i) {
  const auto& x = fd.x_grid;
  const auto& V = fd.V;
  const double dm = x[i] - x[i - 1];
  const double dp = x[i + 1] - x[i];
  return (-dp / (dm * (dm + dp))) * V[i - 1] + ((dp - dm) / (dm * dp)) * V[i] +
         (dm / (dp * (dm + dp))) * V[i + 1];
}

double fd_second_derivative(const FdSolution& fd, std::size_t i) {
  const auto& x = fd.x_grid;
  const auto& V = fd.V;
  const double dm = x[i] - x[i - 1];
  const double dp = x[i + 1] - x[i];
  return 2 * (V[i + 1] * dm + V[i - 1] * dp - V[i] * (dm + dp)) /
         (dm * dp * (dm + dp));
}

FdCell extract_x_star_fd(const Model& model, const FdSolution& fd) {
  const ModelParams& m = model.params;
  const auto& x = fd.x_grid;
  double prev = 0.0;
  bool have_prev = false;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    const double g = std::pow(fd_first_derivative(fd, i), 1 / (m.p - 1)) -
                     (m.k * x[i] + m.ell);
    if (have_prev && prev < 0 && g >= 0) return {x[i - 1], x[i]};
    prev = g;
    have_prev = true;
  }
  throw Error(ErrorCode::NoSignChange,
              "the cap never starts binding on the grid");
}

void write_fd_csv(std::ostream& out, const Model& model, const FdSolution& fd) {
  const ModelParams& m = model.params;
  const auto& x = fd.x_grid;
  out.precision(17);
  out << "x,V,Vx,Vxx,c_star,pi_star,region\n";
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    const bool capped = fd.c[i] >= (m.k * x[i] + m.ell) * (1 - 1e-12);
    out << x[i] << ',' << fd.V[i] << ',' << fd_first_derivative(fd, i) << ','
        << fd_second_derivative(fd, i) << ',' << fd.c[i] << ',' << fd.pi[i]
        << ',' << (capped ? "C" : "U") << '\n';
  }
}

void write_fd_log(std::ostream& out, const FdSolution& fd) {
  out.precision(6);
  out << "iteration,update\n";
  for (std::size_t i = 0; i < fd.update_history.size(); ++i) {
    out << i + 1 << ',' << fd.update_history[i] << '\n';
  }
}

}  // namespace capcon
