#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "capcon/error.hpp"
#include "capcon/free_boundary.hpp"
#include "capcon/serialize.hpp"
#include "capcon/value_function.hpp"
#include "capcon/verify.hpp"
#include "support.hpp"

using namespace capcon;
using namespace capcon::testing;

TEST_CASE("parameter files: strict schema") {
  const auto ok = nlohmann::json::parse(
      R"({"r":0.03,"mu":0.05,"sigma":0.2,"beta":0.1,"p":0.5,"k":0.05,"ell":1})");
  const ModelParams m = params_from_json(ok);
  CHECK(m.ell == 1.0);
  CHECK(m.sigma == 0.2);

  auto extra = ok;
  extra["gamma"] = 1;
  CHECK_THROWS_AS(params_from_json(extra), Error);
  auto missing = ok;
  missing.erase("k");
  CHECK_THROWS_AS(params_from_json(missing), Error);
  auto text = ok;
  text["r"] = "0.03";
  CHECK_THROWS_AS(params_from_json(text), Error);
  CHECK_THROWS_AS(load_params("/nonexistent/params.json"), Error);
}

TEST_CASE("manifest is free of wall-clock data") {
  const nlohmann::json a = run_manifest("solve", make_model(p0()), {5});
  const nlohmann::json b = run_manifest("solve", make_model(p0()), {5});
  CHECK(a == b);
  CHECK(a["tool_version"] == kToolVersion);
  CHECK(a["seeds"][0] == 5);
}

TEST_CASE("table rows are monotone and a single row at the boundary is capped") {
  const ValueFunction vf(solve_x_star(make_model(p0())));
  const auto rows = make_table(vf, 0.5, 200, 50, true);
  REQUIRE(rows.size() == 50);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].x > rows[i - 1].x);
  const auto one = make_table(vf, vf.x_star(), vf.x_star(), 1, false);
  REQUIRE(one.size() == 1);
  CHECK(one[0].region == Region::C);
  std::ostringstream os;
  write_table_csv(os, rows);
  CHECK(os.str().rfind("x,V,Vx,Vxx,c_star,pi_star,region\n", 0) == 0);
  const auto j = table_to_json(rows);
  CHECK(j.size() == 50);
  CHECK(j[0]["x"].get<double>() == doctest::Approx(0.5));
  CHECK_THROWS_AS(make_table(vf, 10, 1, 5, false), Error);
}

TEST_CASE("solution document carries the trajectory") {
  const ValueFunction vf(solve_x_star(make_model(p1())));
  const auto j = solution_to_json(vf);
  CHECK(j["regime"] == "MAIN");
  CHECK(j["x_star"].get<double>() == doctest::Approx(kP1XStar).epsilon(1e-6));
  CHECK(j["trajectory"]["y"].size() > 10);
  bool ye = false;
  for (const auto& e : j["trajectory"]["events"]) ye |= e["kind"] == "YE_CROSSING";
  CHECK(ye);
}

TEST_CASE("verification passes for solved boundaries") {
  for (const auto& p : {p0(), p1()}) {
    const VerifyReport rep = run_verify(make_model(p));
    CHECK_MESSAGE(rep.passed(), rep.to_json().dump());
  }
  ModelParams h = p0();
  h.ell = 0;
  CHECK(run_verify(make_model(h)).passed());
  h = p0();
  h.k = 0.5;
  CHECK(run_verify(make_model(h)).passed());
}

TEST_CASE("verification catches a shifted boundary") {
  for (double shift : {0.05, -0.05}) {
    for (const auto& p : {p0(), p1()}) {
      VerifyOptions opt;
      opt.corrupt_x_star = shift;
      const VerifyReport rep = run_verify(make_model(p), opt);
      CHECK_FALSE(rep.passed());
      const auto failed = rep.failed();
      CHECK(std::find(failed.begin(), failed.end(), "fd_cross_check") != failed.end());
    }
  }
}

TEST_CASE("verification refuses regimes without a value") {
  ModelParams p = p0();
  p.beta = 0.01;
  CHECK_THROWS_AS(run_verify(make_model(p)), Error);
}
