#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <capcon/capcon.h>

#include <cmath>
#include <string>

namespace {

const char* kP0 =
    R"({"r":0.03,"mu":0.05,"sigma":0.2,"beta":0.1,"p":0.5,"k":0.05,"ell":1.0})";

struct Owned {
  char* s = nullptr;
  ~Owned() { capcon_string_free(s); }
};

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(capcon_version()).size() > 0);
  CHECK(std::string(capcon_status_name(CAPCON_ERR_UNSUPPORTED)) == "UNSUPPORTED");
}

TEST_CASE("model lifecycle and regime") {
  capcon_model* m = nullptr;
  REQUIRE(capcon_model_parse(kP0, &m) == CAPCON_OK);
  const char* regime = nullptr;
  CHECK(capcon_model_regime(m, &regime) == CAPCON_OK);
  CHECK(std::string(regime) == "MAIN");
  Owned j;
  CHECK(capcon_model_json(m, &j.s) == CAPCON_OK);
  CHECK(std::string(j.s).find("\"kappa\"") != std::string::npos);
  capcon_model_free(m);
}

TEST_CASE("errors map to status codes and leave a message") {
  capcon_model* m = nullptr;
  CHECK(capcon_model_parse("{\"r\":1}", &m) == CAPCON_ERR_INVALID_PARAMETER);
  CHECK(m == nullptr);
  CHECK(std::string(capcon_last_error()).size() > 0);
  CHECK(capcon_model_parse("not json", &m) == CAPCON_ERR_INVALID_PARAMETER);
  CHECK(capcon_model_load("/nonexistent.json", &m) == CAPCON_ERR_IO);
  CHECK(capcon_model_parse(nullptr, &m) == CAPCON_ERR_INVALID_ARGUMENT);

  const capcon_params ill{0.03, 0.05, 0.2, 0.01, 0.5, 0.05, 1.0};
  REQUIRE(capcon_model_create(&ill, &m) == CAPCON_OK);
  capcon_solution* s = nullptr;
  CHECK(capcon_solve(m, 0, &s) == CAPCON_ERR_ILL_POSED);
  capcon_model_free(m);

  const capcon_params open{0.06, 0.05, 0.2, 0.1, 0.5, 0.05, 1.0};
  REQUIRE(capcon_model_create(&open, &m) == CAPCON_OK);
  CHECK(capcon_solve(m, 0, &s) == CAPCON_ERR_UNSUPPORTED);
  capcon_model_free(m);
}

TEST_CASE("solve, evaluate, tabulate, simulate, verify") {
  capcon_model* m = nullptr;
  REQUIRE(capcon_model_parse(kP0, &m) == CAPCON_OK);
  capcon_solution* s = nullptr;
  REQUIRE(capcon_solve(m, 0, &s) == CAPCON_OK);

  double xs = 0;
  CHECK(capcon_solution_x_star(s, &xs) == CAPCON_OK);
  CHECK(xs == doctest::Approx(15.0037).epsilon(1e-5));

  capcon_point pt{};
  CHECK(capcon_evaluate(s, 2 * xs, &pt) == CAPCON_OK);
  CHECK(pt.region == 1);
  CHECK(pt.c == doctest::Approx(0.05 * 2 * xs + 1));
  CHECK(capcon_evaluate(s, -1, &pt) == CAPCON_ERR_DOMAIN);

  Owned csv, bad;
  CHECK(capcon_table(s, 1, 100, 10, 1, 0, "t", &csv.s) == CAPCON_OK);
  CHECK(std::string(csv.s).rfind("x,V,Vx,Vxx,c_star,pi_star,region\n", 0) == 0);
  CHECK(capcon_table(s, 1, 100, 10, 1, 7, "t", &bad.s) == CAPCON_ERR_INVALID_ARGUMENT);

  const capcon_sim_config cfg{xs, 1e-2, 20, 64, 1, 2};
  Owned a, b, q;
  CHECK(capcon_simulate(s, &cfg, "optimal,scaled:0.8", "sim", &a.s, &q.s) == CAPCON_OK);
  const capcon_sim_config cfg1{xs, 1e-2, 20, 64, 1, 1};
  CHECK(capcon_simulate(s, &cfg1, "optimal,scaled:0.8", "sim", &b.s, nullptr) == CAPCON_OK);
  CHECK(std::string(a.s) == std::string(b.s));
  CHECK(std::string(a.s).find("\"differences\"") != std::string::npos);
  CHECK(std::string(q.s).rfind("q,", 0) == 0);
  Owned c;
  CHECK(capcon_simulate(s, &cfg, "greedy", "sim", &c.s, nullptr) == CAPCON_ERR_INVALID_PARAMETER);

  Owned rep;
  int passed = 0;
  CHECK(capcon_verify(m, 0, "verify", &rep.s, &passed) == CAPCON_OK);
  CHECK(passed == 1);
  Owned rep2;
  CHECK(capcon_verify(m, 0.05, "verify", &rep2.s, &passed) == CAPCON_OK);
  CHECK(passed == 0);

  capcon_solution_free(s);
  capcon_model_free(m);
}
