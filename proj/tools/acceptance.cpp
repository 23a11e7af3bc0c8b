// Acceptance runner: one PASS/FAIL line per criterion, then exit 0.
// A nonzero exit means the runner itself broke, not that a criterion failed.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../tests/support.hpp"
#include "capcon/closed_forms.hpp"
#include "capcon/error.hpp"
#include "capcon/free_boundary.hpp"
#include "capcon/hjb_fd_oracle.hpp"
#include "capcon/mc_engine.hpp"
#include "capcon/value_function.hpp"

using namespace capcon;
using capcon::testing::draw_homogeneous;
using capcon::testing::draw_main;
using capcon::testing::draw_merton;
using capcon::testing::p0;
using capcon::testing::p1;
using capcon::testing::uniform;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

void report(int n, bool ok, const std::string& detail) {
  std::cout << "criterion " << n << ": " << (ok ? "PASS" : "FAIL") << "  "
            << detail << std::endl;
}

void note(const std::string& text) { std::cout << "    " << text << std::endl; }

std::vector<double> log_points(double lo, double hi, int n) {
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) xs.push_back(lo * std::pow(hi / lo, double(i) / (n - 1)));
  return xs;
}

// Formula evaluated from the raw parameters in long double.
long double reference_value(const ModelParams& m, double x) {
  using ld = long double;
  const ld theta = ld(m.mu) * m.mu / (2 * ld(m.sigma) * m.sigma * (1 - ld(m.p)));
  const ld kappa = (ld(m.beta) - m.p * (theta + m.r)) / (1 - ld(m.p));
  const ld rate = std::min<ld>(kappa, m.k);
  return std::pow(rate, ld(m.p)) / (m.p * (kappa * (1 - m.p) + rate * m.p)) *
         std::pow(ld(x), ld(m.p));
}

void criterion1() {
  std::mt19937_64 rng(101);
  const auto t0 = Clock::now();
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const bool merton = i % 2 == 0;
    const ModelParams m = merton ? draw_merton(rng) : draw_homogeneous(rng);
    const Model model = make_model(m);
    const double x = std::exp(uniform(rng, std::log(1e-3), std::log(1e3)));
    const double v = merton ? merton_value(model, x) : homogeneous_value(model, x);
    const long double ref = reference_value(m, x);
    worst = std::max(worst, double(std::abs((v - ref) / ref)));
  }
  const double t = seconds_since(t0);
  report(1, worst <= 1e-12 && t < 1.0,
         "closed forms vs long-double formula at 1000 draws: worst rel " +
             fmt(worst) + " (limit 1e-12), " + fmt(t) + " s (limit 1 s)");
}

void criterion2() {
  std::vector<std::pair<std::string, ModelParams>> cases{{"P0", p0()}, {"P1", p1()}};
  std::mt19937_64 rng(202);
  for (int i = 0; i < 50; ++i) cases.push_back({"draw " + std::to_string(i), draw_main(rng)});
  int inside = 0;
  double slowest = 0;
  std::vector<std::string> bad;
  for (const auto& [name, m] : cases) {
    const Model model = make_model(m);
    const auto t0 = Clock::now();
    try {
      const ValueSolution s = solve_x_star(model);
      const double t = seconds_since(t0);
      slowest = std::max(slowest, t);
      const bool ok = s.bracket.lower < s.x_star && s.x_star < s.bracket.upper;
      if (ok && t < 5.0) {
        ++inside;
      } else {
        bad.push_back(name + (ok ? " slow " + fmt(t) + " s" : " outside bracket"));
      }
    } catch (const Error& e) {
      slowest = std::max(slowest, seconds_since(t0));
      bad.push_back(name + " threw " + e.what());
    }
  }
  report(2, bad.empty(),
         std::to_string(inside) + "/" + std::to_string(cases.size()) +
             " solves strictly inside the bracket under 5 s, slowest " +
             fmt(slowest) + " s");
  for (const auto& b : bad) note(b);
}

void criterion3() {
  bool all = true;
  std::string detail;
  const auto t0 = Clock::now();
  for (const auto& [name, m] : {std::pair{"P0", p0()}, std::pair{"P1", p1()}}) {
    const Model model = make_model(m);
    const ValueFunction vf(solve_x_star(model));
    FdOptions fo;
    fo.n_nodes = 4000;
    const FdSolution fd = solve_fd(model, fo);
    const double xs = vf.x_star();
    double worst = 0;
    for (std::size_t i = 1; i + 1 < fd.x_grid.size(); ++i) {
      const double x = fd.x_grid[i];
      if (x < 0.05 * xs || x > 20 * xs) continue;
      const double v = vf.value(x);
      worst = std::max(worst, std::abs(v - fd.V[i]) / v);
    }
    const FdCell cell = extract_x_star_fd(model, fd);
    const bool in_cell = cell.lower <= xs && xs <= cell.upper;
    all = all && worst <= 5e-3 && in_cell;
    detail += std::string(name) + " worst rel " + fmt(worst) + ", x* " + fmt(xs, 10) +
              (in_cell ? " in" : " NOT in") + " FD cell [" + fmt(cell.lower, 8) +
              ", " + fmt(cell.upper, 8) + "]; ";
  }
  const double t = seconds_since(t0);
  report(3, all && t < 60.0, detail + fmt(t) + " s (limit 60 s)");
}

void criterion4() {
  bool all = true;
  std::string detail;
  for (const auto& [name, m] : {std::pair{"P0", p0()}, std::pair{"P1", p1()}}) {
    const Model model = make_model(m);
    const ValueFunction vf(solve_x_star(model));
    const double xs = vf.x_star();
    const double reach = asymptotic_wealth(model, vf.solution()->y_min);
    double worst = 0;
    int n = 0;
    for (double x : log_points(1e-2 * xs, 0.999 * reach, 500)) {
      if (std::abs(x - xs) <= 1e-6 * xs) continue;
      if (model.consts.x_e && std::abs(x - *model.consts.x_e) <= 1e-6 * *model.consts.x_e) continue;
      const ValuePoint pt = vf.evaluate(x);
      worst = std::max(worst, std::abs(vf.hjb_residual(pt)) / (m.beta * pt.v));
      ++n;
    }
    const Pasting ps = pasting_at_boundary(vf);
    const double c1 = std::abs(ps.vx_left / ps.vx_right - 1);
    const double c2 = std::abs(ps.vxx_left / ps.vxx_right - 1);
    all = all && worst <= 1e-6 && c1 <= 1e-7 && c2 <= 1e-5;
    detail += std::string(name) + " HJB " + fmt(worst) + " at " + std::to_string(n) +
              " points, C1 " + fmt(c1) + ", C2 " + fmt(c2) + "; ";
  }
  report(4, all, detail + "limits 1e-6 / 1e-7 / 1e-5");
}

void criterion5() {
  std::mt19937_64 rng(505);
  int passed = 0;
  double worst = -INFINITY;
  std::vector<std::string> bad;
  for (int i = 0; i < 20; ++i) {
    const Model model = make_model(draw_main(rng));
    const ModelParams& m = model.params;
    const DerivedConstants& dc = model.consts;
    try {
      const ValueFunction vf(solve_x_star(model));
      const double xs = vf.x_star();
      const double hi = std::min(1e3 * xs, vf.x_limit());
      double excess = -INFINITY;
      bool concave = true;
      double prev = INFINITY;
      for (double x : log_points(1e-3 * xs, hi, 1000)) {
        const ValuePoint pt = vf.evaluate(x);
        const double xp = std::pow(x, m.p);
        const double upper = std::pow(dc.kappa, m.p - 1) * xp / m.p;
        const double dup = std::pow(dc.kappa * x, m.p - 1);
        const double dlow = std::pow(dc.eta * x, m.p - 1);
        excess = std::max({excess, (dc.a_inf * xp - pt.v) / upper,
                           (pt.v - upper) / upper, (dlow - pt.vx) / dup,
                           (pt.vx - dup) / dup, (x * pt.vx - m.p * pt.v) / (m.p * pt.v)});
        if (!(pt.vxx < 0) || !(pt.vx < prev)) concave = false;
        prev = pt.vx;
      }
      worst = std::max(worst, excess);
      if (excess <= 1e-12 && concave) {
        ++passed;
      } else {
        bad.push_back("draw " + std::to_string(i) + ": excess " + fmt(excess) +
                      (concave ? "" : ", concavity lost"));
      }
    } catch (const Error& e) {
      bad.push_back("draw " + std::to_string(i) + " threw " + e.what());
    }
  }
  report(5, bad.empty(),
         std::to_string(passed) +
             "/20 draws satisfy value, derivative and Euler bounds and strict "
             "concavity at 1000 points; worst relative excess " + fmt(worst) +
             " (tolerance 1e-12)");
  for (const auto& b : bad) note(b);
}

// One scale of the Monte Carlo experiment. Returns true when every check holds.
bool mc_experiment(const Model& model, const ValueFunction& vf, const SimConfig& base,
                   const std::vector<double>& x0s, std::vector<std::string>& lines) {
  const PolicyPtr opt = make_optimal_policy(vf);
  const std::vector<PolicyPtr> policies{
      opt, make_scaled_policy(opt, model, 0.8, 1.0),
      make_scaled_policy(opt, model, 1.2, 1.0), make_scaled_policy(opt, model, 1.0, 0.5)};
  bool ok = true;
  for (double x0 : x0s) {
    SimConfig cfg = base;
    cfg.x0 = x0;
    const Comparison cmp = compare_policies(model, cfg, policies);
    const SimEstimate& e = cmp.estimates.front();
    const double v = vf.value(x0);
    const double z = std::abs(e.mean - v) / e.std_error;
    bool row = z <= 3.0;
    std::string line = "x0 " + fmt(x0) + ": V " + fmt(v, 6) + ", MC " + fmt(e.mean, 6) +
                       " +- " + fmt(e.std_error, 3) + " (" + fmt(z, 3) + " SE)";
    for (const auto& d : cmp.differences) {
      const double zd = d.mean / d.std_error;
      row = row && d.mean > 0 && zd >= 2.0;
      line += "; vs " + d.other + " " + fmt(zd, 3) + " SE";
    }
    ok = ok && row;
    lines.push_back(line);
  }
  return ok;
}

void criterion6(int threads, bool full) {
  const Model model = make_model(p0());
  const ValueFunction vf(solve_x_star(model));
  const double xs = vf.x_star();
  const std::vector<double> x0s{0.2 * xs, xs, 5 * xs};
  // e^{-beta T} <= 1e-8 with T no shorter than 200.
  const double horizon = std::max(200.0, std::log(1e8) / model.params.beta);

  SimConfig full_cfg;
  full_cfg.dt = 1e-3;
  full_cfg.horizon = horizon;
  full_cfg.n_paths = 200000;
  full_cfg.seed = 6;
  full_cfg.threads = threads;

  // Runtime projection from a slice with the full step count.
  SimConfig slice = full_cfg;
  slice.n_paths = 256;
  slice.x0 = xs;
  const PolicyPtr opt = make_optimal_policy(vf);
  const std::vector<PolicyPtr> four{opt, make_scaled_policy(opt, model, 0.8, 1.0),
                                    make_scaled_policy(opt, model, 1.2, 1.0),
                                    make_scaled_policy(opt, model, 1.0, 0.5)};
  const auto t0 = Clock::now();
  compare_policies(model, slice, four);
  const double per_path = seconds_since(t0) / double(slice.n_paths);
  const double projected = per_path * double(full_cfg.n_paths) * double(x0s.size());

  std::vector<std::string> lines;
  if (full) {
    const auto t1 = Clock::now();
    const bool ok = mc_experiment(model, vf, full_cfg, x0s, lines);
    const double t = seconds_since(t1);
    report(6, ok && t < 600.0,
           "full scale (200k paths, dt 1e-3, T " + fmt(horizon) + ", " +
               std::to_string(threads) + " threads): " + fmt(t) + " s (limit 600 s)");
    for (const auto& l : lines) note(l);
    return;
  }

  report(6, false,
         "full scale (200k paths, dt 1e-3, T " + fmt(horizon) + ") projected at " +
             fmt(projected / 60.0, 3) + " min on " + std::to_string(threads) +
             " thread(s), limit 10 min; set CAPCON_ACCEPT_FULL=1 to run it anyway");
  SimConfig small = full_cfg;
  small.n_paths = 1000;
  small.dt = 2e-2;
  const bool ok = mc_experiment(model, vf, small, x0s, lines);
  note(std::string("reduced scale (1000 paths, dt 2e-2), informational: ") +
       (ok ? "all statistical checks hold" : "some statistical checks miss"));
  for (const auto& l : lines) note(l);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void criterion7(const std::string& cli, const std::string& config, const std::string& tmp) {
  if (cli.empty()) {
    report(7, false, "no CLI path given (--cli)");
    return;
  }
  const std::vector<std::pair<std::string, std::string>> commands{
      {"solve", "solve " + config},
      {"simulate", "simulate " + config +
                       " --x0 5 --paths 2000 --dt 0.01 --horizon 200 --seed 7"
                       " --policy optimal,scaled:0.8"}};
  bool all = true;
  std::string detail;
  for (const auto& [name, args] : commands) {
    std::vector<std::string> outputs;
    bool ran = true;
    for (int threads : {1, 8, 1, 8}) {
      const std::string out =
          tmp + "/det_" + name + "_" + std::to_string(outputs.size()) + ".txt";
      const std::string cmd = "CAPCON_THREADS=" + std::to_string(threads) + " \"" + cli +
                              "\" " + args + " > \"" + out + "\"";
      if (std::system(cmd.c_str()) != 0) ran = false;
      outputs.push_back(slurp(out));
    }
    const bool same = ran && !outputs[0].empty() &&
                      std::all_of(outputs.begin(), outputs.end(),
                                  [&](const std::string& s) { return s == outputs[0]; });
    all = all && same;
    detail += name + (same ? " identical" : ran ? " DIFFERS" : " failed to run") + " (" +
              std::to_string(outputs[0].size()) + " bytes); ";
  }
  report(7, all, detail + "threads 1, 8, 1, 8");
}

void criterion8() {
  ModelParams m = p0();
  m.ell = 1e-4;
  SolveOptions opt;
  opt.shooting.min_reach_wealth = 1e3;
  const ValueFunction vf(solve_x_star(make_model(m), opt));
  m.ell = 0;
  const Model hom = make_model(m);
  double worst = 0;
  for (double x : log_points(1.0, 100.0, 200)) {
    const double h = homogeneous_value(hom, x);
    worst = std::max(worst, std::abs(vf.value(x) - h) / h);
  }
  report(8, worst <= 2e-3,
         "ell = 1e-4 (x* " + fmt(vf.x_star()) + ") vs ell = 0 closed form on [1, 100]: "
         "worst rel " + fmt(worst) + " (limit 2e-3)");
}

void guarded(int n, const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(n, false, std::string("threw: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria runner"};
  std::string cli, config, tmp = ".";
  bool full = false;
  app.add_option("--cli", cli, "path to the capcon executable");
  app.add_option("--config", config, "P0 config used for the determinism runs");
  app.add_option("--tmp", tmp, "scratch directory");
  app.add_flag("--full-mc", full, "run the Monte Carlo criterion at full scale");
  CLI11_PARSE(app, argc, argv);

  if (const char* f = std::getenv("CAPCON_ACCEPT_FULL"); f && std::string(f) == "1") full = true;
  int threads = 1;
  if (const char* t = std::getenv("CAPCON_THREADS")) threads = std::max(1, std::atoi(t));

  guarded(1, criterion1);
  guarded(2, criterion2);
  guarded(3, criterion3);
  guarded(4, criterion4);
  guarded(5, criterion5);
  guarded(6, [&] { criterion6(threads, full); });
  guarded(7, [&] { criterion7(cli, config, tmp); });
  guarded(8, criterion8);
  return 0;
}
