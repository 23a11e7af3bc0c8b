#include <doctest.h>

#include <random>

#include "capcon/error.hpp"
#include "capcon/market_model.hpp"
#include "support.hpp"

using namespace capcon;
using namespace capcon::testing;

// Values below were computed at 30 digits with mpmath.

TEST_CASE("derived constants for the baseline market") {
  const Model m = make_model(p0());
  const auto& c = m.consts;
  CHECK(c.theta == doctest::Approx(0.0625).epsilon(1e-14));
  CHECK(c.kappa == doctest::Approx(0.1075).epsilon(1e-14));
  CHECK(c.eta == doctest::Approx(0.266667187499999986306266352987).epsilon(1e-13));
  CHECK(c.lambda_plus == doctest::Approx(1.75662558596310929330870294988).epsilon(1e-13));
  CHECK(c.lambda_minus == doctest::Approx(-0.136625585963109275545134555882).epsilon(1e-13));
  CHECK(c.a_inf == doctest::Approx(5.67890279999946591315581427859).epsilon(1e-13));
  CHECK(c.merton_fraction == doctest::Approx(2.5).epsilon(1e-14));
  CHECK_FALSE(c.x_e.has_value());
  CHECK(c.regime == Regime::Main);

  const Bracket b = free_boundary_bracket(m.params, c);
  CHECK(b.lower == doctest::Approx(4.61537352073672934907105188396).epsilon(1e-13));
  CHECK(b.upper == doctest::Approx(17.3913043478260874602146047449).epsilon(1e-13));
}

TEST_CASE("derived constants when r exceeds k") {
  const Model m = make_model(p1());
  const auto& c = m.consts;
  CHECK(c.kappa == doctest::Approx(0.0775).epsilon(1e-14));
  CHECK(c.eta == doctest::Approx(1.4833984375000000630870139115).epsilon(1e-13));
  CHECK(c.lambda_plus == doctest::Approx(1.46716219269427533894478093977).epsilon(1e-13));
  CHECK(c.a_inf == doctest::Approx(4.57142857142857134926978395535).epsilon(1e-13));
  REQUIRE(c.x_e.has_value());
  CHECK(*c.x_e == doctest::Approx(20.0).epsilon(1e-13));
  const Bracket b = free_boundary_bracket(m.params, c);
  CHECK(b.lower == doctest::Approx(0.678703040907765288249761204371).epsilon(1e-13));
  CHECK(b.upper == doctest::Approx(14.8148148148148143731623084482).epsilon(1e-13));
}

TEST_CASE("regime classification") {
  ModelParams m = p0();
  CHECK(derive(m).regime == Regime::Main);

  m.beta = 0.01;
  CHECK(derive(m).regime == Regime::IllPosed);

  m = p0();
  m.k = 0.5;
  CHECK(derive(m).regime == Regime::MertonEquivalent);

  m = p0();
  m.ell = 0.0;
  CHECK(derive(m).regime == Regime::Homogeneous);

  m = p0();
  m.r = 0.06;  // kappa = 0.0775 < k + r = 0.11
  CHECK(derive(m).regime == Regime::Unsupported);

  m = p0();
  m.k = 0.0;
  CHECK(derive(m).regime == Regime::Unsupported);
}

TEST_CASE("invalid inputs are rejected with a named invariant") {
  const auto bad = [](ModelParams m) {
    try {
      derive(m);
    } catch (const Error& e) {
      return e.code() == ErrorCode::InvalidParameter;
    }
    return false;
  };
  ModelParams m = p0();
  m.sigma = 0;
  CHECK(bad(m));
  m = p0();
  m.p = 1.0;
  CHECK(bad(m));
  m = p0();
  m.p = 0.0;
  CHECK(bad(m));
  m = p0();
  m.k = -0.1;
  CHECK(bad(m));
  m = p0();
  m.ell = -1;
  CHECK(bad(m));
  m = p0();
  m.r = std::nan("");
  CHECK(bad(m));
}

TEST_CASE("bracket requires the free-boundary regime") {
  ModelParams m = p0();
  m.ell = 0.0;
  const DerivedConstants c = derive(m);
  CHECK_THROWS_AS(free_boundary_bracket(m, c), Error);
}

TEST_CASE("property: lambda roots solve the characteristic and eta exceeds kappa") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const ModelParams m = draw_main(rng);
    const DerivedConstants c = derive(m);
    REQUIRE(c.regime == Regime::Main);
    CHECK(std::abs(characteristic(m, c.theta, c.lambda_plus)) < 1e-12);
    CHECK(std::abs(characteristic(m, c.theta, c.lambda_minus)) < 1e-12);
    CHECK(c.lambda_plus > 1.0);
    CHECK(c.lambda_minus < 0.0);
    CHECK(c.eta > c.kappa);
    const Bracket b = free_boundary_bracket(m, c);
    CHECK(b.lower > 0);
    CHECK(b.lower < b.upper);
  }
}
