#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "capcon/closed_forms.hpp"
#include "capcon/error.hpp"
#include "support.hpp"

using namespace capcon;
using namespace capcon::testing;

namespace {

// beta V - sup_{0<=c<=cap} (c^p/p - c V') - r x V' - sup_pi (pi mu V' + sigma^2 pi^2 V''/2)
double hjb(const ModelParams& m, double x, double v, double vx, double vxx,
           double cap) {
  const double c = std::min(std::pow(vx, 1 / (m.p - 1)), cap);
  const double ham_c = std::pow(c, m.p) / m.p - c * vx;
  const double ham_pi = -m.mu * m.mu * vx * vx / (2 * m.sigma * m.sigma * vxx);
  return m.beta * v - ham_c - m.r * x * vx - ham_pi;
}

}  // namespace

TEST_CASE("power_of maps zero to zero") {
  CHECK(power_of(0.0, 0.5) == 0.0);
  CHECK(power_of(4.0, 0.5) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("merton value at a hand-checked point") {
  ModelParams m = p0();
  m.k = 0.5;
  const Model model = make_model(m);
  // kappa = 0.1075: V(1) = 0.1075^{-1/2} / 0.5
  CHECK(merton_value(model, 1.0) == doctest::Approx(2.0 / std::sqrt(0.1075)).epsilon(1e-14));
  const PolicyPoint pp = merton_policy(model, 2.0);
  CHECK(pp.c == doctest::Approx(0.215).epsilon(1e-14));
  CHECK(pp.pi == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("merton value rejects an ill-posed market") {
  ModelParams m = p0();
  m.beta = 0.01;
  CHECK_THROWS_AS(merton_value(make_model(m), 1.0), Error);
}

TEST_CASE("homogeneous value needs ell = 0") {
  CHECK_THROWS_AS(homogeneous_value(make_model(p0()), 1.0), Error);
}

TEST_CASE("property: merton closed form solves the uncapped HJB") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 300; ++i) {
    const ModelParams m = draw_merton(rng);
    const Model model = make_model(m);
    REQUIRE(model.consts.regime == Regime::MertonEquivalent);
    const double kappa = model.consts.kappa;
    const double x = std::exp(uniform(rng, -5.0, 8.0));
    const double v = merton_value(model, x);
    const double a = std::pow(kappa, m.p - 1);
    const double vx = a * std::pow(x, m.p - 1);
    const double vxx = (m.p - 1) * a * std::pow(x, m.p - 2);
    CHECK(std::abs(hjb(m, x, v, vx, vxx, m.k * x + m.ell)) <= 1e-11 * m.beta * v);
    const PolicyPoint pp = merton_policy(model, x);
    CHECK(pp.c <= m.k * x + m.ell);
    CHECK(pp.pi == doctest::Approx(-m.mu * vx / (m.sigma * m.sigma * vxx)).epsilon(1e-12));
  }
}

TEST_CASE("property: homogeneous closed form solves the capped HJB") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    const ModelParams m = draw_homogeneous(rng);
    const Model model = make_model(m);
    REQUIRE(model.consts.regime == Regime::Homogeneous);
    const double x = std::exp(uniform(rng, -5.0, 8.0));
    const double v = homogeneous_value(model, x);
    // V = A x^p with A from the value itself; derivatives follow.
    const double a = v / std::pow(x, m.p);
    const double vx = m.p * a * std::pow(x, m.p - 1);
    const double vxx = m.p * (m.p - 1) * a * std::pow(x, m.p - 2);
    CHECK(std::abs(hjb(m, x, v, vx, vxx, m.k * x)) <= 1e-11 * m.beta * v);
    // cap binds everywhere
    CHECK(std::pow(vx, 1 / (m.p - 1)) >= m.k * x * (1 - 1e-12));
    const PolicyPoint pp = homogeneous_policy(model, x);
    CHECK(pp.c == doctest::Approx(m.k * x).epsilon(1e-13));
    // value sits below the uncapped Merton value
    CHECK(v < std::pow(model.consts.kappa, m.p - 1) * std::pow(x, m.p) / m.p);
  }
}

TEST_CASE("homogeneous coefficient matches the large-wealth constant") {
  const Model model = make_model(p0());
  CHECK(homogeneous_coefficient(model.params, model.consts.kappa) ==
        doctest::Approx(model.consts.a_inf).epsilon(1e-14));
}
