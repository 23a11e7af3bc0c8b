#include "capcon/capcon.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "capcon/error.hpp"
#include "capcon/free_boundary.hpp"
#include "capcon/mc_engine.hpp"
#include "capcon/serialize.hpp"
#include "capcon/value_function.hpp"
#include "capcon/verify.hpp"

struct capcon_model {
  capcon::Model model;
};

struct capcon_solution {
  capcon::ValueFunction vf;
};

namespace {

thread_local std::string g_last_error;

capcon_status status_of(capcon::ErrorCode code) {
  using capcon::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidParameter: return CAPCON_ERR_INVALID_PARAMETER;
    case ErrorCode::IllPosed: return CAPCON_ERR_ILL_POSED;
    case ErrorCode::Unsupported: return CAPCON_ERR_UNSUPPORTED;
    case ErrorCode::RegimeMismatch: return CAPCON_ERR_REGIME;
    case ErrorCode::Domain: return CAPCON_ERR_DOMAIN;
    case ErrorCode::Extrapolation: return CAPCON_ERR_EXTRAPOLATION;
    case ErrorCode::PolicyViolation: return CAPCON_ERR_POLICY_VIOLATION;
    case ErrorCode::Io: return CAPCON_ERR_IO;
    case ErrorCode::BracketFailure:
    case ErrorCode::NoSignChange:
    case ErrorCode::NonConvergence:
    case ErrorCode::ConcavityLoss:
    case ErrorCode::Numerical:
      return CAPCON_ERR_NUMERICAL;
  }
  return CAPCON_ERR_INTERNAL;
}

template <class F>
capcon_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return CAPCON_OK;
  } catch (const capcon::Error& e) {
    const std::string name = capcon::to_string(e.code());
    const std::string what = e.what();
    g_last_error = what.rfind(name, 0) == 0 ? what : name + ": " + what;
    return status_of(e.code());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("INVALID_PARAMETER: ") + e.what();
    return CAPCON_ERR_INVALID_PARAMETER;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return CAPCON_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CAPCON_ERR_INTERNAL;
  }
}

capcon_status bad_argument(const char* what) {
  g_last_error = std::string("INVALID_ARGUMENT: ") + what;
  return CAPCON_ERR_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

capcon::PolicyPtr parse_policy(const std::string& spec,
                               const capcon::Model& model,
                               const capcon::ValueFunction& vf) {
  using namespace capcon;
  if (spec == "optimal") return make_optimal_policy(vf);
  if (spec == "merton") return make_merton_policy(model);
  if (spec == "zero") return make_zero_consumption_policy(make_optimal_policy(vf));
  const bool on_c = spec.rfind("scaled:", 0) == 0;
  if (on_c || spec.rfind("pi:", 0) == 0) {
    const std::string num = spec.substr(spec.find(':') + 1);
    char* end = nullptr;
    const double f = std::strtod(num.c_str(), &end);
    if (num.empty() || end != num.c_str() + num.size() || !(f >= 0)) {
      throw Error(ErrorCode::InvalidParameter,
                  "bad policy factor in '" + spec + "'");
    }
    return make_scaled_policy(make_optimal_policy(vf), model, on_c ? f : 1.0,
                              on_c ? 1.0 : f);
  }
  throw Error(ErrorCode::InvalidParameter,
              "unknown policy '" + spec +
                  "' (expected optimal, merton, zero, scaled:<f> or pi:<f>)");
}

}  // namespace

extern "C" {

const char* capcon_version(void) { return capcon::kToolVersion; }

const char* capcon_status_name(capcon_status status) {
  switch (status) {
    case CAPCON_OK: return "OK";
    case CAPCON_ERR_INVALID_ARGUMENT: return "INVALID_ARGUMENT";
    case CAPCON_ERR_INVALID_PARAMETER: return "INVALID_PARAMETER";
    case CAPCON_ERR_ILL_POSED: return "ILL_POSED";
    case CAPCON_ERR_UNSUPPORTED: return "UNSUPPORTED";
    case CAPCON_ERR_REGIME: return "REGIME_MISMATCH";
    case CAPCON_ERR_DOMAIN: return "DOMAIN";
    case CAPCON_ERR_EXTRAPOLATION: return "EXTRAPOLATION";
    case CAPCON_ERR_NUMERICAL: return "NUMERICAL";
    case CAPCON_ERR_POLICY_VIOLATION: return "POLICY_VIOLATION";
    case CAPCON_ERR_IO: return "IO";
    case CAPCON_ERR_INTERNAL: return "INTERNAL";
  }
  return "UNKNOWN";
}

const char* capcon_last_error(void) { return g_last_error.c_str(); }

void capcon_string_free(char* s) { std::free(s); }

capcon_status capcon_model_create(const capcon_params* params,
                                  capcon_model** out) {
  if (!params || !out) return bad_argument("null pointer");
  *out = nullptr;
  return guarded([&] {
    const capcon::ModelParams mp{params->r,    params->mu, params->sigma,
                                 params->beta, params->p,  params->k,
                                 params->ell};
    *out = new capcon_model{capcon::make_model(mp)};
  });
}

capcon_status capcon_model_parse(const char* json, capcon_model** out) {
  if (!json || !out) return bad_argument("null pointer");
  *out = nullptr;
  return guarded([&] {
    const auto j = nlohmann::json::parse(json);
    *out = new capcon_model{capcon::make_model(capcon::params_from_json(j))};
  });
}

capcon_status capcon_model_load(const char* path, capcon_model** out) {
  if (!path || !out) return bad_argument("null pointer");
  *out = nullptr;
  return guarded([&] {
    *out = new capcon_model{capcon::make_model(capcon::load_params(path))};
  });
}

void capcon_model_free(capcon_model* model) { delete model; }

capcon_status capcon_model_regime(const capcon_model* model,
                                  const char** name) {
  if (!model || !name) return bad_argument("null pointer");
  *name = capcon::to_string(model->model.consts.regime);
  return CAPCON_OK;
}

capcon_status capcon_model_json(const capcon_model* model, char** out) {
  if (!model || !out) return bad_argument("null pointer");
  *out = nullptr;
  return guarded([&] {
    nlohmann::json j{{"params", capcon::to_json(model->model.params)},
                     {"derived", capcon::to_json(model->model.consts)}};
    *out = dup_string(dump(j));
  });
}

capcon_status capcon_solve(const capcon_model* model, double tol,
                           capcon_solution** out) {
  if (!model || !out) return bad_argument("null pointer");
  if (!(tol >= 0) || tol >= 1) return bad_argument("tol must be in [0, 1)");
  *out = nullptr;
  return guarded([&] {
    const capcon::Model& m = model->model;
    if (m.consts.regime == capcon::Regime::Main) {
      capcon::SolveOptions opt;
      if (tol > 0) opt.tol = tol;
      *out = new capcon_solution{capcon::ValueFunction(capcon::solve_x_star(m, opt))};
    } else {
      *out = new capcon_solution{capcon::ValueFunction(m)};
    }
  });
}

void capcon_solution_free(capcon_solution* solution) { delete solution; }

capcon_status capcon_solution_x_star(const capcon_solution* s, double* x_star) {
  if (!s || !x_star) return bad_argument("null pointer");
  *x_star = s->vf.x_star();
  return CAPCON_OK;
}

capcon_status capcon_solution_json(const capcon_solution* s,
                                   const char* command, char** out) {
  if (!s || !out) return bad_argument("null pointer");
  *out = nullptr;
  return guarded([&] {
    nlohmann::json j{
        {"manifest", capcon::run_manifest(command ? command : "solve",
                                          s->vf.model())},
        {"solution", capcon::solution_to_json(s->vf)}};
    *out = dup_string(dump(j));
  });
}

capcon_status capcon_evaluate(const capcon_solution* s, double x,
                              capcon_point* out) {
  if (!s || !out) return bad_argument("null pointer");
  return guarded([&] {
    const capcon::ValuePoint pt = s->vf.evaluate(x);
    const capcon::PolicyPoint pp = s->vf.policy(x);
    *out = capcon_point{pt.x, pt.v, pt.vx, pt.vxx, pp.c, pp.pi,
                        pt.region == capcon::Region::C ? 1 : 0,
                        pt.one_sided ? 1 : 0};
  });
}

capcon_status capcon_table(const capcon_solution* s, double x_min,
                           double x_max, int points, int log_spacing,
                           int format, const char* command, char** out) {
  if (!s || !out) return bad_argument("null pointer");
  if (format != 0 && format != 1) return bad_argument("format must be 0 or 1");
  *out = nullptr;
  return guarded([&] {
    const auto rows =
        capcon::make_table(s->vf, x_min, x_max, points, log_spacing != 0);
    if (format == 0) {
      std::ostringstream csv;
      capcon::write_table_csv(csv, rows);
      *out = dup_string(csv.str());
    } else {
      nlohmann::json j{
          {"manifest", capcon::run_manifest(command ? command : "table",
                                            s->vf.model())},
          {"rows", capcon::table_to_json(rows)}};
      *out = dup_string(dump(j));
    }
  });
}

capcon_status capcon_simulate(const capcon_solution* s,
                              const capcon_sim_config* config,
                              const char* policy, const char* command,
                              char** json, char** quantiles_csv) {
  if (!s || !config || !policy || !json) return bad_argument("null pointer");
  *json = nullptr;
  if (quantiles_csv) *quantiles_csv = nullptr;
  return guarded([&] {
    const capcon::Model& m = s->vf.model();
    capcon::SimConfig cfg;
    cfg.x0 = config->x0;
    cfg.dt = config->dt;
    cfg.horizon = config->horizon;
    cfg.n_paths = static_cast<long>(config->n_paths);
    cfg.seed = config->seed;
    cfg.threads = config->threads;
    cfg.keep_paths = quantiles_csv != nullptr;
    std::vector<capcon::PolicyPtr> policies;
    std::string list = policy;
    for (std::size_t pos = 0;;) {
      const std::size_t comma = list.find(',', pos);
      policies.push_back(parse_policy(list.substr(pos, comma - pos), m, s->vf));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    nlohmann::json j{
        {"manifest", capcon::run_manifest(command ? command : "simulate", m,
                                          {cfg.seed})},
        {"config",
         {{"x0", cfg.x0},
          {"dt", cfg.dt},
          {"horizon", cfg.horizon},
          {"n_paths", cfg.n_paths},
          {"seed", cfg.seed},
          {"policy", policy}}}};
    capcon::SimEstimate first;
    if (policies.size() == 1) {
      first = capcon::simulate(m, cfg, *policies.front());
      j["estimate"] = capcon::to_json(first);
    } else {
      capcon::Comparison cmp = capcon::compare_policies(m, cfg, policies);
      j["comparison"] = capcon::to_json(cmp);
      first = std::move(cmp.estimates.front());
    }
    try {
      j["value_x0"] = s->vf.value(cfg.x0);
    } catch (const capcon::ExtrapolationError& e) {
      j["value_x0"] = nullptr;
      j["value_x0_asymptotic"] = e.asymptotic_fallback();
    }
    std::string q;
    if (quantiles_csv) {
      std::ostringstream os;
      capcon::write_path_quantiles(os, first);
      q = os.str();
    }
    *json = dup_string(dump(j));
    if (quantiles_csv) *quantiles_csv = dup_string(q);
  });
}

capcon_status capcon_verify(const capcon_model* model, double corrupt_x_star,
                            const char* command, char** report, int* passed) {
  if (!model || !report || !passed) return bad_argument("null pointer");
  *report = nullptr;
  *passed = 0;
  return guarded([&] {
    capcon::VerifyOptions opt;
    opt.corrupt_x_star = corrupt_x_star;
    const capcon::VerifyReport rep = capcon::run_verify(model->model, opt);
    nlohmann::json j{
        {"manifest", capcon::run_manifest(command ? command : "verify",
                                          model->model)},
        {"report", rep.to_json()}};
    *report = dup_string(dump(j));
    *passed = rep.passed() ? 1 : 0;
  });
}

}  // extern "C"
