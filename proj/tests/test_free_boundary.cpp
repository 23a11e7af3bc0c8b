#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "capcon/error.hpp"
#include "capcon/free_boundary.hpp"
#include "support.hpp"

using namespace capcon;
using namespace capcon::testing;

TEST_CASE("baseline boundary matches the reference shooting code") {
  const Model m = make_model(p0());
  const ValueSolution s = solve_x_star(m);
  CHECK(rel(s.x_star, kP0XStar) < 1e-6);
  CHECK(std::abs(s.residual) <= 1e-6);
  CHECK(s.trajectory.status == DualStatus::Completed);
  CHECK(s.x_star > s.bracket.lower);
  CHECK(s.x_star < s.bracket.upper);
  CHECK(s.y_star == doctest::Approx(std::pow(0.05 * s.x_star + 1, -0.5)).epsilon(1e-14));
}

TEST_CASE("r > k boundary and the x_e crossing") {
  const Model m = make_model(p1());
  const ValueSolution s = solve_x_star(m);
  CHECK(rel(s.x_star, kP1XStar) < 1e-6);
  const auto& ev = s.trajectory.events;
  const auto it = std::find_if(ev.begin(), ev.end(), [](const TrajectoryEvent& e) {
    return e.kind == DualEvent::YeCrossing;
  });
  REQUIRE(it != ev.end());
  CHECK(it->x == doctest::Approx(20.0).epsilon(1e-6));
}

TEST_CASE("residual signs at the bracket ends") {
  for (const auto& params : {p0(), p1()}) {
    const Model m = make_model(params);
    const Bracket b = free_boundary_bracket(m.params, m.consts);
    const double y_min = shooting_y_min(m);
    const double w = b.upper - b.lower;
    CHECK(shooting_residual(m, b.lower + 1e-6 * w, y_min) < 0);
    CHECK(shooting_residual(m, b.upper - 1e-6 * w, y_min) > 0);
  }
}

TEST_CASE("property: residual changes sign once across the bracket") {
  const Model m = make_model(p0());
  const auto scan = residual_scan(m, 33);
  int changes = 0;
  for (std::size_t i = 1; i < scan.size(); ++i) {
    if ((scan[i - 1].residual < 0) != (scan[i].residual < 0)) ++changes;
  }
  CHECK(changes == 1);
}

TEST_CASE("dual trajectory stays convex and on the capped branch") {
  const Model m = make_model(p0());
  const ValueSolution s = solve_x_star(m);
  const auto& t = s.trajectory;
  REQUIRE(t.size() > 10);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(t.vyy[i] > 0);
    const double x = -t.vy[i];
    CHECK(std::pow(t.y[i], 1 / (m.params.p - 1)) >= m.params.k * x + m.params.ell - 1e-8 * x);
    if (i > 0) {
      CHECK(t.y[i] < t.y[i - 1]);
      CHECK(-t.vy[i] > -t.vy[i - 1]);
    }
  }
}

TEST_CASE("large-wealth series") {
  const Model m = make_model(p0());
  const auto& a = m.consts.tail;
  REQUIRE(a.size() > 10);
  CHECK(a[0] == doctest::Approx(m.consts.a_inf).epsilon(1e-15));
  CHECK(a[1] == doctest::Approx(m.consts.a_1).epsilon(1e-12));
  const double rho = tail_radius(m);
  CHECK(rho > 0);
  for (double x : {2 * rho, 100 * rho, 1e4 * rho}) {
    CHECK(rel(asymptotic_wealth(m, asymptotic_marginal(m, x)), x) < 1e-10);
  }
  // leading term dominates at large wealth
  CHECK(rel(asymptotic_value(m, 1e8), m.consts.a_inf * 1e4) < 1e-3);
}

TEST_CASE("property: series residual in the capped HJB") {
  // beta V - (k x + ell)^p / p + (k x + ell) V' - r x V' + h V'^2 / V''
  std::mt19937_64 rng(23);
  for (int i = 0; i < 50; ++i) {
    const Model model = make_model(draw_main(rng));
    const ModelParams& m = model.params;
    const double x = 3 * tail_radius(model);
    const double h = 1e-4 * x;
    const double v = asymptotic_value(model, x);
    const double vx = asymptotic_marginal(model, x);
    const double vxx = (asymptotic_marginal(model, x + h) - asymptotic_marginal(model, x - h)) / (2 * h);
    const double cap = m.k * x + m.ell;
    const double res = m.beta * v - std::pow(cap, m.p) / m.p + cap * vx - m.r * x * vx +
                       model.consts.half_sharpe_sq * vx * vx / vxx;
    CHECK(std::abs(res) <= 1e-6 * m.beta * v);
  }
}

TEST_CASE("reach adapts to the growth of the unstable mode") {
  const Model m = make_model(p0());
  CHECK(tail_growth_exponent(m) == doctest::Approx(0.478).epsilon(1e-2));
  ShootingOptions loose, tight;
  tight.max_amplification = 10;
  CHECK(shooting_y_min(m, tight) > shooting_y_min(m, loose));
}

TEST_CASE("shooting reach changes the boundary only slightly") {
  const Model m = make_model(p0());
  SolveOptions a, b;
  a.shooting.reach = 1e3;
  b.shooting.reach = 1e5;
  CHECK(rel(solve_x_star(m, a).x_star, solve_x_star(m, b).x_star) < 1e-5);
}

TEST_CASE("integrator domain checks") {
  const Model m = make_model(p0());
  CHECK_THROWS_AS(integrate_dual(m, 0.1, 1.0, -1.0, 0.2), Error);
  CHECK_THROWS_AS(integrate_dual(m, 0.5, 1.0, 1.0, 0.2), Error);
}

TEST_CASE("solver refuses non-free-boundary regimes") {
  ModelParams p = p0();
  p.ell = 0;
  CHECK_THROWS_AS(solve_x_star(make_model(p)), Error);
}

TEST_CASE("property: random draws land strictly inside the bracket") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 10; ++i) {
    const Model m = make_model(draw_main(rng));
    const ValueSolution s = solve_x_star(m);
    CHECK(s.x_star > s.bracket.lower);
    CHECK(s.x_star < s.bracket.upper);
    CHECK(std::abs(s.residual) <= 1e-6);
  }
}
