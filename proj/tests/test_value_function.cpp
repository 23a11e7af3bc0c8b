#include <doctest.h>

#include <cmath>

#include "capcon/closed_forms.hpp"
#include "capcon/error.hpp"
#include "capcon/free_boundary.hpp"
#include "capcon/value_function.hpp"
#include "support.hpp"

using namespace capcon;
using namespace capcon::testing;

namespace {

const ValueFunction& p0_vf() {
  static const ValueFunction vf(solve_x_star(make_model(p0())));
  return vf;
}

}  // namespace

TEST_CASE("regions split at the boundary") {
  const ValueFunction& vf = p0_vf();
  CHECK(vf.region(0.5 * vf.x_star()) == Region::U);
  CHECK(vf.region(vf.x_star()) == Region::C);
  CHECK(vf.region(2 * vf.x_star()) == Region::C);
  CHECK(vf.value(0.0) == 0.0);
}

TEST_CASE("consumption equals the cap in C and is below it in U") {
  const ValueFunction& vf = p0_vf();
  for (double f : {0.1, 0.5, 0.9}) {
    const double x = f * vf.x_star();
    CHECK(vf.policy(x).c < 0.05 * x + 1);
  }
  for (double f : {1.0, 2.0, 50.0}) {
    const double x = f * vf.x_star();
    CHECK(vf.policy(x).c == doctest::Approx(0.05 * x + 1).epsilon(1e-14));
  }
}

TEST_CASE("smooth pasting at the boundary") {
  const ValueFunction& vf = p0_vf();
  const Pasting ps = pasting_at_boundary(vf);
  CHECK(rel(ps.vx_left, ps.vx_right) <= 1e-7);
  CHECK(rel(ps.vxx_left, ps.vxx_right) <= 1e-5);
}

TEST_CASE("property: value bounds, monotonicity and strict concavity") {
  const ValueFunction& vf = p0_vf();
  const Model& m = vf.model();
  const double kappa = m.consts.kappa, p = m.params.p;
  double prev_v = 0, prev_vx = INFINITY;
  for (int i = 0; i < 400; ++i) {
    const double x = vf.x_star() * std::pow(10.0, -3 + 5.0 * i / 399);
    const ValuePoint pt = vf.evaluate(x);
    CHECK(pt.v > prev_v);
    CHECK(pt.vx < prev_vx);
    CHECK(pt.vxx < 0);
    CHECK(pt.v <= std::pow(kappa, p - 1) * std::pow(x, p) / p);
    prev_v = pt.v;
    prev_vx = pt.vx;
  }
}

TEST_CASE("property: HJB residual is small on both regions") {
  const ValueFunction& vf = p0_vf();
  for (int i = 0; i < 200; ++i) {
    const double x = vf.x_star() * std::pow(10.0, -2 + 3.5 * i / 199);
    if (std::abs(x / vf.x_star() - 1) < 1e-6) continue;
    const ValuePoint pt = vf.evaluate(x);
    CHECK(std::abs(vf.hjb_residual(pt)) <= 1e-6 * vf.model().params.beta * pt.v);
  }
}

TEST_CASE("allocation maximizes the HJB rather than staying proportional") {
  const ValueFunction& vf = p0_vf();
  const Model& m = vf.model();
  const double x = 2 * vf.x_star();
  const ValuePoint pt = vf.evaluate(x);
  const double expect = -m.params.mu * pt.vx / (m.params.sigma * m.params.sigma * pt.vxx);
  CHECK(vf.policy(x).pi == doctest::Approx(expect).epsilon(1e-10));
  // the cap lowers risk taking below the Merton fraction
  CHECK(vf.policy(x).pi < m.consts.merton_fraction * x);
}

TEST_CASE("queries past the integrated range extrapolate loudly") {
  const ValueFunction& vf = p0_vf();
  try {
    (void)vf.evaluate(vf.x_limit() * 10);
    FAIL("expected ExtrapolationError");
  } catch (const ExtrapolationError& e) {
    CHECK(e.asymptotic_fallback() > 0);
  }
  CHECK_THROWS_AS(vf.evaluate(-1.0), Error);
}

TEST_CASE("closed-form regimes") {
  ModelParams p = p0();
  p.ell = 0;
  const ValueFunction hom{make_model(p)};
  CHECK(hom.x_star() == 0.0);
  CHECK(hom.value(3.0) == doctest::Approx(homogeneous_value(hom.model(), 3.0)).epsilon(1e-15));
  CHECK(hom.region(3.0) == Region::C);

  p = p0();
  p.k = 0.5;
  const ValueFunction mer{make_model(p)};
  CHECK(std::isinf(mer.x_star()));
  CHECK(mer.value(3.0) == doctest::Approx(merton_value(mer.model(), 3.0)).epsilon(1e-15));
  CHECK(mer.region(3.0) == Region::U);

  CHECK_THROWS_AS(ValueFunction{make_model(p0())}, Error);
}

TEST_CASE("small ell approaches the proportional-cap value") {
  ModelParams p = p0();
  p.ell = 1e-4;
  SolveOptions opt;
  opt.shooting.min_reach_wealth = 1e3;  // boundary is near 1e-3; cover [1, 100]
  const ValueFunction vf(solve_x_star(make_model(p), opt));
  p.ell = 0;
  const Model hom = make_model(p);
  for (double x : {1.0, 10.0, 100.0}) {
    CHECK(rel(vf.value(x), homogeneous_value(hom, x)) < 2e-3);
  }
}
