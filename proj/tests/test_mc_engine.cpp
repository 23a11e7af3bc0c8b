#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "capcon/closed_forms.hpp"
#include "capcon/error.hpp"
#include "capcon/free_boundary.hpp"
#include "capcon/mc_engine.hpp"
#include "capcon/philox.hpp"
#include "support.hpp"

using namespace capcon;
using namespace capcon::testing;

TEST_CASE("philox known-answer vectors") {
  // Reference outputs shipped with the Random123 distribution.
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        PhiloxBlock{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                      {0xffffffffu, 0xffffffffu}) ==
        PhiloxBlock{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                      {0xa4093822u, 0x299f31d0u}) ==
        PhiloxBlock{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("philox streams are reproducible and distinct") {
  PhiloxStream a(42, 0), b(42, 0), c(42, 1), d(43, 0);
  int same_c = 0, same_d = 0;
  for (int i = 0; i < 64; ++i) {
    const auto x = a();
    CHECK(x == b());
    same_c += x == c();
    same_d += x == d();
  }
  CHECK(same_c < 2);
  CHECK(same_d < 2);

  PhiloxStream g(7, 3);
  std::normal_distribution<double> n;
  double s = 0, s2 = 0;
  const int count = 200000;
  for (int i = 0; i < count; ++i) {
    const double z = n(g);
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / count) < 0.01);
  CHECK(std::abs(s2 / count - 1) < 0.02);
}

namespace {

struct Fixture {
  Model model = make_model(p0());
  ValueFunction vf{solve_x_star(model)};
  PolicyPtr optimal = make_optimal_policy(vf);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

SimConfig small(double x0) {
  SimConfig c;
  c.x0 = x0;
  c.dt = 1e-2;
  c.horizon = 40;
  c.n_paths = 300;
  c.seed = 9;
  return c;
}

class Overspend final : public Policy {
 public:
  PolicyPoint at(double x) const override { return {0.05 * x + 2.0, 0.0}; }
  std::string name() const override { return "overspend"; }
};

}  // namespace

TEST_CASE("tabulated policy matches the value function") {
  const Fixture& f = fixture();
  for (int i = 0; i < 500; ++i) {
    const double x = f.vf.x_star() * std::pow(10.0, -4 + 7.0 * i / 499);
    if (x > f.vf.x_limit()) break;
    const PolicyPoint a = f.optimal->at(x), b = f.vf.policy(x);
    CHECK(rel(a.c, b.c) < 1e-8);
    CHECK(rel(a.pi, b.pi) < 1e-8);
  }
}

TEST_CASE("zero consumption scores exactly zero") {
  const Fixture& f = fixture();
  const SimEstimate e =
      simulate(f.model, small(f.vf.x_star()), *make_zero_consumption_policy(f.optimal));
  CHECK(e.mean == 0.0);
  CHECK(e.std_error == 0.0);
}

TEST_CASE("a policy against itself differs by exactly zero") {
  const Fixture& f = fixture();
  const Comparison cmp = compare_policies(f.model, small(f.vf.x_star()), {f.optimal, f.optimal});
  REQUIRE(cmp.differences.size() == 1);
  CHECK(cmp.differences[0].mean == 0.0);
  CHECK(cmp.differences[0].std_error == 0.0);
}

TEST_CASE("results do not depend on the thread count") {
  const Fixture& f = fixture();
  SimConfig c = small(f.vf.x_star());
  c.n_paths = 1000;  // several reduction blocks
  c.threads = 1;
  const SimEstimate a = simulate(f.model, c, *f.optimal);
  c.threads = 4;
  const SimEstimate b = simulate(f.model, c, *f.optimal);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
  CHECK(a.truncation_bound == b.truncation_bound);
  c.seed = 10;
  CHECK(simulate(f.model, c, *f.optimal).mean != a.mean);
}

TEST_CASE("cap violations abort with the offending state") {
  const Fixture& f = fixture();
  try {
    (void)simulate(f.model, small(1.0), Overspend{});
    FAIL("expected PolicyViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PolicyViolation);
    CHECK(std::string(e.what()).find("t = ") != std::string::npos);
  }
}

TEST_CASE("scaled policy respects the cap") {
  const Fixture& f = fixture();
  const PolicyPtr up = make_scaled_policy(f.optimal, f.model, 1.2, 1.0);
  for (double x : {1.0, 10.0, 100.0}) {
    CHECK(up->at(x).c <= 0.05 * x + 1);
    CHECK(up->at(x).c >= f.optimal->at(x).c);
  }
}

TEST_CASE("merton policy estimate brackets the closed form") {
  ModelParams p = p0();
  p.k = 0.5;
  const Model m = make_model(p);
  SimConfig c;
  c.x0 = 5.0;
  c.dt = 1e-2;
  c.horizon = 200;
  c.n_paths = 2000;
  c.seed = 3;
  const SimEstimate e = simulate(m, c, *make_merton_policy(m));
  const double v = merton_value(m, c.x0);
  CHECK(e.mean <= v + 3 * e.std_error);
  CHECK(e.mean + e.truncation_bound >= v - 3 * e.std_error);
}

TEST_CASE("path quantiles need retained paths") {
  const Fixture& f = fixture();
  SimConfig c = small(f.vf.x_star());
  c.keep_paths = true;
  std::ostringstream os;
  write_path_quantiles(os, simulate(f.model, c, *f.optimal));
  CHECK(os.str().rfind("q,utility,terminal_wealth\n", 0) == 0);
  c.keep_paths = false;
  std::ostringstream none;
  CHECK_THROWS(write_path_quantiles(none, simulate(f.model, c, *f.optimal)));
}
