#include <doctest.h>

#include <cmath>

#include "capcon/error.hpp"
#include "capcon/unconstrained_region.hpp"
#include "support.hpp"

using namespace capcon;
using namespace capcon::testing;

TEST_CASE("map endpoints") {
  const Model m = make_model(p0());
  const UMap u(m, kP0XStar);
  CHECK(u.c_star() == doctest::Approx(0.05 * kP0XStar + 1).epsilon(1e-15));
  CHECK(u.x_of_c(u.c_star()) == doctest::Approx(kP0XStar).epsilon(1e-13));
  CHECK(u.x_of_c(1e-12) < 1e-9);
  CHECK(u.coefficient() >= 0);
  CHECK(u.monotone());
}

TEST_CASE("inverse round trip and analytic slope") {
  for (const auto& [params, xs] : {std::pair{p0(), kP0XStar}, std::pair{p1(), kP1XStar}}) {
    const Model m = make_model(params);
    const UMap u(m, xs);
    for (int i = 1; i <= 50; ++i) {
      const double x = xs * i / 50.0;
      const double c = u.c_of_x(x);
      CHECK(rel(u.x_of_c(c), x) < 1e-12);
      const double h = 1e-6 * c;
      if (c + h >= u.c_star()) continue;
      const double fd = (u.x_of_c(c + h) - u.x_of_c(c - h)) / (2 * h);
      CHECK(rel(u.dx_dc(c), fd) < 1e-6);
    }
  }
}

TEST_CASE("consumption rises with wealth and stays under the cap") {
  const Model m = make_model(p0());
  const UMap u(m, kP0XStar);
  double prev = 0;
  for (int i = 1; i <= 200; ++i) {
    const double x = kP0XStar * i / 200.0;
    const double c = u.c_of_x(x);
    CHECK(c > prev);
    CHECK(c <= 0.05 * x + 1 + 1e-12);
    prev = c;
  }
}

TEST_CASE("value on the unconstrained region solves its HJB") {
  const Model model = make_model(p0());
  const ModelParams& m = model.params;
  const UMap u(model, kP0XStar);
  for (int i = 1; i <= 40; ++i) {
    const double c = u.c_star() * i / 40.0;
    const UValue uv = value_on_u(model, u, c);
    CHECK(uv.vx == doctest::Approx(std::pow(c, m.p - 1)).epsilon(1e-13));
    CHECK(uv.vxx < 0);
    const double ham = std::pow(c, m.p) / m.p - c * uv.vx + m.r * uv.x * uv.vx -
                       m.mu * m.mu * uv.vx * uv.vx / (2 * m.sigma * m.sigma * uv.vxx);
    CHECK(std::abs(m.beta * uv.v - ham) <= 1e-12 * m.beta * uv.v);
  }
}

TEST_CASE("queries outside (0, c_star] throw") {
  const Model m = make_model(p0());
  const UMap u(m, kP0XStar);
  CHECK_THROWS_AS(u.x_of_c(-1.0), Error);
  CHECK_THROWS_AS(u.c_of_x(2 * kP0XStar), Error);
}

TEST_CASE("map loses monotonicity near the lower bracket end") {
  const Model m = make_model(p0());
  const Bracket b = free_boundary_bracket(m.params, m.consts);
  CHECK_FALSE(UMap(m, b.lower * 1.0001).monotone());
  CHECK(UMap(m, b.upper * 0.9999).monotone());
}
