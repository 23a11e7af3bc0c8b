#include "capcon/verify.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "capcon/closed_forms.hpp"
#include "capcon/error.hpp"
#include "capcon/free_boundary.hpp"
#include "capcon/hjb_fd_oracle.hpp"
#include "capcon/value_function.hpp"

namespace capcon {

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const Check& c) { return c.passed; });
}

std::vector<std::string> VerifyReport::failed() const {
  std::vector<std::string> out;
  for (const auto& c : checks) {
    if (!c.passed) out.push_back(c.name);
  }
  return out;
}

nlohmann::json VerifyReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name},
                   {"passed", c.passed},
                   {"value", std::isfinite(c.value) ? nlohmann::json(c.value)
                                                    : nlohmann::json(nullptr)},
                   {"limit", c.limit},
                   {"detail", c.detail}});
  }
  return {{"regime", regime},
          {"x_star", std::isfinite(x_star) ? nlohmann::json(x_star)
                                           : nlohmann::json(nullptr)},
          {"passed", passed()},
          {"failed", failed()},
          {"checks", arr}};
}

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

// Worst-case tracker that also remembers where.
struct Worst {
  double value = -INFINITY;
  double at = NAN;
  void see(double v, double x) {
    if (!(v <= value)) {  // NaN counts as worst
      value = v;
      at = x;
    }
  }
};

Check finish(const std::string& name, const Worst& w, double limit,
             const std::string& what) {
  Check c{name, w.value <= limit, w.value, limit, ""};
  c.detail = std::isnan(w.at) ? what + ": nothing to compare"
                              : what + " worst " + fmt(w.value) + " at x = " +
                                    fmt(w.at);
  return c;
}

Check failure(const std::string& name, double limit, const std::string& why) {
  return Check{name, false, NAN, limit, why};
}

std::vector<double> log_points(double lo, double hi, int n) {
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) {
    xs.push_back(lo * std::pow(hi / lo, n == 1 ? 0.0 : double(i) / (n - 1)));
  }
  return xs;
}

void bound_checks(const ValueFunction& vf, double lo, double hi, int n,
                  std::vector<Check>& out) {
  const Model& model = vf.model();
  const DerivedConstants& dc = model.consts;
  const double p = model.params.p;
  const double eta = dc.regime == Regime::MertonEquivalent ? dc.kappa : dc.eta;
  const double a_low = dc.regime == Regime::MertonEquivalent
                           ? std::pow(dc.kappa, p - 1) / p
                           : dc.a_inf;
  Worst value_b, deriv_b, euler_b, concave, decreasing;
  double prev_vx = INFINITY;
  try {
    for (double x : log_points(lo, hi, n)) {
      const ValuePoint pt = vf.evaluate(x);
      const double xp = power_of(x, p);
      const double upper = std::pow(dc.kappa, p - 1) * xp / p;
      const double lower = a_low * xp;
      value_b.see(std::max(lower - pt.v, pt.v - upper) / upper, x);
      const double dlow = std::pow(eta * x, p - 1);
      const double dup = std::pow(dc.kappa * x, p - 1);
      deriv_b.see(std::max(dlow - pt.vx, pt.vx - dup) / dup, x);
      euler_b.see((x * pt.vx - p * pt.v) / (p * pt.v), x);
      concave.see(pt.vxx, x);
      decreasing.see(pt.vx - prev_vx, x);
      prev_vx = pt.vx;
    }
  } catch (const Error& e) {
    for (const char* name : {"bounds_value", "bounds_derivative",
                             "bounds_euler", "strict_concavity"}) {
      out.push_back(failure(name, 0.0, e.what()));
    }
    return;
  }
  const double slack = 1e-12;
  out.push_back(finish("bounds_value", value_b, slack,
                       "a_inf x^p <= V <= kappa^{p-1} x^p / p, relative excess"));
  out.push_back(finish("bounds_derivative", deriv_b, slack,
                       "(eta x)^{p-1} <= V_x <= (kappa x)^{p-1}, relative excess"));
  out.push_back(finish("bounds_euler", euler_b, slack,
                       "x V_x <= p V, relative excess"));
  Worst conc = concave;
  conc.see(decreasing.value, decreasing.at);
  out.push_back(finish("strict_concavity", conc, -1e-300,
                       "V_xx < 0 and V_x decreasing, max of V_xx / V_x step"));
}

void hjb_check(const ValueFunction& vf, double lo, double hi, int n,
               std::vector<Check>& out) {
  const Model& model = vf.model();
  const double xs = vf.x_star();
  const std::optional<double> xe = model.consts.x_e;
  Worst w;
  try {
    for (double x : log_points(lo, hi, n)) {
      if (std::isfinite(xs) && std::abs(x - xs) <= 1e-6 * xs) continue;
      if (xe && std::abs(x - *xe) <= 1e-6 * *xe) continue;
      const ValuePoint pt = vf.evaluate(x);
      w.see(std::abs(vf.hjb_residual(pt)) / (model.params.beta * pt.v), x);
    }
  } catch (const Error& e) {
    out.push_back(failure("hjb_residual", 1e-6, e.what()));
    return;
  }
  out.push_back(finish("hjb_residual", w, 1e-6, "|HJB| / (beta V)"));
}

void fd_checks(const ValueFunction& vf, const VerifyOptions& opt,
               std::vector<Check>& out) {
  const Model& model = vf.model();
  FdOptions fo;
  fo.n_nodes = opt.fd_nodes;
  FdSolution fd;
  try {
    fd = solve_fd(model, fo);
  } catch (const Error& e) {
    out.push_back(failure("fd_cross_check", 5e-3, e.what()));
    return;
  }
  const bool has_boundary = vf.solution() != nullptr;
  const double xs = vf.x_star();
  double lo, hi;
  if (has_boundary) {
    lo = 0.05 * xs;
    hi = 20 * xs;
  } else {
    const std::size_t n = fd.x_grid.size();
    lo = fd.x_grid[n / 4];
    hi = fd.x_grid[3 * n / 4];
  }
  Worst wv, wpi;
  try {
    for (std::size_t i = 1; i + 1 < fd.x_grid.size(); ++i) {
      const double x = fd.x_grid[i];
      if (x < lo || x > hi) continue;
      wv.see(std::abs(fd.V[i] / vf.value(x) - 1), x);
      wpi.see(std::abs(fd.pi[i] / vf.policy(x).pi - 1), x);
    }
  } catch (const Error& e) {
    out.push_back(failure("fd_cross_check", 5e-3, e.what()));
    return;
  }
  out.push_back(finish("fd_cross_check", wv, 5e-3,
                       "|V - V_fd| / V on [" + fmt(lo) + ", " + fmt(hi) + "]"));
  out.push_back(finish("fd_allocation", wpi, 2e-2,
                       "|pi_fd / pi - 1| with pi = -mu V_x / (sigma^2 V_xx)"));

  double rise = 0.0;
  const auto& h = fd.update_history;
  for (std::size_t i = 6; i < h.size(); ++i) rise = std::max(rise, h[i] - h[i - 1]);
  out.push_back({"fd_iteration_monotone", rise <= 0.0, rise, 0.0,
                 std::to_string(fd.iterations) +
                     " iterations, largest update increase after the fifth " +
                     fmt(rise)});

  if (has_boundary) {
    try {
      const FdCell cell = extract_x_star_fd(model, fd);
      const bool inside = cell.lower <= xs && xs <= cell.upper;
      out.push_back({"fd_boundary_cell", inside, xs, 0.0,
                     "cell [" + fmt(cell.lower) + ", " + fmt(cell.upper) +
                         "] vs x* = " + fmt(xs)});
    } catch (const Error& e) {
      out.push_back(failure("fd_boundary_cell", 0.0, e.what()));
    }
  }
}

void boundary_checks(const Model& model, const ValueFunction& vf,
                     const VerifyOptions& opt, std::vector<Check>& out) {
  const ValueSolution& sol = *vf.solution();
  const DualTrajectory& tr = sol.trajectory;
  const ModelParams& m = model.params;

  {
    const Bracket& br = sol.bracket;
    const bool inside = br.lower < sol.x_star && sol.x_star < br.upper;
    out.push_back({"bracket", inside, sol.x_star, 0.0,
                   "x* = " + fmt(sol.x_star) + " in (" + fmt(br.lower) + ", " +
                       fmt(br.upper) + ")"});
  }
  {
    const bool done = tr.status == DualStatus::Completed;
    const double res = std::abs(sol.residual);
    out.push_back({"asymptote_match", done && res <= 5e-3, res, 5e-3,
                   std::string("trajectory ") + to_string(tr.status) +
                       ", relative wealth mismatch at y_min " + fmt(res)});
  }
  {
    Worst branch, convex, order;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const double d = m.ell - m.k * tr.vy[i];
      branch.see(d / std::pow(tr.y[i], 1 / (m.p - 1)) - 1, -tr.vy[i]);
      convex.see(-tr.vyy[i], -tr.vy[i]);
      if (i > 0) order.see(tr.vy[i] - tr.vy[i - 1], -tr.vy[i]);
    }
    out.push_back(finish("region_c_membership", branch, 1e-10,
                         "d(y) / y^{1/(p-1)} - 1 on the trajectory"));
    Worst both = convex;
    both.see(order.value, order.at);
    out.push_back(finish("dual_convexity", both, 0.0,
                         "-v_yy and v_y increments along decreasing y"));
  }
  try {
    const Pasting ps = pasting_at_boundary(vf);
    const double c1 = std::abs(ps.vx_left / ps.vx_right - 1);
    const double c2 = std::abs(ps.vxx_left / ps.vxx_right - 1);
    out.push_back({"c1_pasting", c1 <= 1e-7, c1, 1e-7,
                   "V_x left/right at x*: " + fmt(ps.vx_left) + " / " +
                       fmt(ps.vx_right)});
    out.push_back({"c2_pasting", c2 <= 1e-5, c2, 1e-5,
                   "V_xx left/right at x*: " + fmt(ps.vxx_left) + " / " +
                       fmt(ps.vxx_right)});
  } catch (const Error& e) {
    out.push_back(failure("c1_pasting", 1e-7, e.what()));
    out.push_back(failure("c2_pasting", 1e-5, e.what()));
  }
  {
    const std::vector<ScanPoint> scan = residual_scan(model, opt.scan_points);
    bool monotone = true;
    for (std::size_t i = 1; i < scan.size(); ++i) {
      if ((scan[i - 1].residual >= 0) && (scan[i].residual < 0)) monotone = false;
    }
    const bool straddles =
        scan.front().residual < 0 && scan.back().residual > 0;
    std::ostringstream d;
    d << "signs:";
    for (const auto& s : scan) d << (s.residual < 0 ? " -" : " +");
    out.push_back({"residual_sign_scan", monotone && straddles,
                   double(scan.size()), 0.0, d.str()});
  }
  if (model.consts.x_e) {
    const double xe = *model.consts.x_e;
    const bool reached = vf.x_limit() > xe;
    bool crossing = false;
    double where = NAN;
    for (const auto& e : tr.events) {
      if (e.kind == DualEvent::YeCrossing) {
        crossing = true;
        where = e.x;
      }
    }
    bool stray_floor = false;
    for (const auto& e : tr.events) {
      if (e.kind == DualEvent::VyyFloor &&
          std::abs(e.x - xe) > 1e-3 * xe) {
        stray_floor = true;
      }
    }
    const bool ok = sol.x_star < xe && reached && crossing && !stray_floor;
    out.push_back({"ye_audit", ok, where, xe,
                   "x_e = " + fmt(xe) + (sol.x_star < xe ? " in C" : " NOT in C") +
                       (crossing ? ", crossing recorded at x = " + fmt(where)
                                 : ", no crossing event") +
                       (stray_floor ? ", v_yy floor hit away from y_e" : "")});
  }
}

}  // namespace

VerifyReport run_verify(const Model& model, const VerifyOptions& opt) {
  VerifyReport rep;
  rep.regime = to_string(model.consts.regime);
  const Regime regime = model.consts.regime;
  if (regime == Regime::IllPosed) {
    throw Error(ErrorCode::IllPosed, model.consts.diagnostic);
  }
  if (regime == Regime::Unsupported) {
    throw Error(ErrorCode::Unsupported, model.consts.diagnostic);
  }

  if (regime != Regime::Main) {
    ValueFunction vf(model);
    rep.x_star = vf.x_star();
    bound_checks(vf, 1e-3, 1e3, opt.bound_points, rep.checks);
    hjb_check(vf, 1e-3, 1e3, opt.hjb_points, rep.checks);
    fd_checks(vf, opt, rep.checks);
    return rep;
  }

  ValueSolution solved = solve_x_star(model);
  std::optional<ValueFunction> vf;
  if (opt.corrupt_x_star != 0) {
    const double xc = solved.x_star * (1 + opt.corrupt_x_star);
    try {
      vf.emplace(solution_at(model, xc));
    } catch (const Error& e) {
      rep.x_star = xc;
      rep.checks.push_back(failure("boundary_solution", 0.0, e.what()));
      return rep;
    }
  } else {
    vf.emplace(std::move(solved));
  }
  rep.x_star = vf->x_star();
  const double xs = rep.x_star;
  bound_checks(*vf, 1e-3 * xs, 1e3 * xs, opt.bound_points, rep.checks);
  // Out to the wealth the shooting targets; a trajectory that stopped early
  // cannot be evaluated there.
  const double reach = asymptotic_wealth(model, vf->solution()->y_min);
  hjb_check(*vf, 1e-2 * xs, 0.999 * reach, opt.hjb_points, rep.checks);
  boundary_checks(model, *vf, opt, rep.checks);
  fd_checks(*vf, opt, rep.checks);
  return rep;
}

}  // namespace capcon
