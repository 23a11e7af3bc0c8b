#include "capcon/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "capcon/error.hpp"

namespace capcon {

using nlohmann::json;

namespace {

const char* const kParamKeys[] = {"r", "mu", "sigma", "beta", "p", "k", "ell"};

// JSON has no infinity; non-finite numbers become null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

ModelParams params_from_json(const json& j) {
  if (!j.is_object()) {
    throw Error(ErrorCode::InvalidParameter, "config must be a JSON object");
  }
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : kParamKeys) known = known || item.key() == k;
    if (!known) {
      throw Error(ErrorCode::InvalidParameter,
                  "unknown config key '" + item.key() + "'");
    }
  }
  double vals[7];
  for (int i = 0; i < 7; ++i) {
    const char* key = kParamKeys[i];
    if (!j.contains(key)) {
      throw Error(ErrorCode::InvalidParameter,
                  std::string("config is missing '") + key + "'");
    }
    if (!j[key].is_number()) {
      throw Error(ErrorCode::InvalidParameter,
                  std::string("config key '") + key + "' must be a number");
    }
    vals[i] = j[key].get<double>();
  }
  return {vals[0], vals[1], vals[2], vals[3], vals[4], vals[5], vals[6]};
}

ModelParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidParameter,
                "config '" + path + "' is not valid JSON: " + e.what());
  }
  return params_from_json(j);
}

json to_json(const ModelParams& m) {
  return json{{"r", m.r},       {"mu", m.mu}, {"sigma", m.sigma},
              {"beta", m.beta}, {"p", m.p},   {"k", m.k},
              {"ell", m.ell}};
}

json to_json(const DerivedConstants& c) {
  json j{{"theta", number(c.theta)},
         {"kappa", number(c.kappa)},
         {"eta", number(c.eta)},
         {"merton_fraction", number(c.merton_fraction)},
         {"lambda_plus", number(c.lambda_plus)},
         {"lambda_minus", number(c.lambda_minus)},
         {"x_e", c.x_e ? json(*c.x_e) : json(nullptr)},
         {"a_inf", number(c.a_inf)},
         {"a_1", number(c.a_1)},
         {"regime", to_string(c.regime)},
         {"diagnostic", c.diagnostic}};
  return j;
}

json to_json(const SimEstimate& e) {
  return json{{"policy", e.policy},
              {"mean", e.mean},
              {"std_error", e.std_error},
              {"truncation_bound", e.truncation_bound},
              {"absorbed_fraction", e.absorbed_fraction},
              {"n_paths", e.n_paths},
              {"n_steps", e.n_steps}};
}

json to_json(const Comparison& c) {
  json est = json::array();
  for (const auto& e : c.estimates) est.push_back(to_json(e));
  json diffs = json::array();
  for (const auto& d : c.differences) {
    diffs.push_back({{"reference", d.reference},
                     {"other", d.other},
                     {"mean", d.mean},
                     {"std_error", d.std_error}});
  }
  return json{{"estimates", est}, {"differences", diffs}};
}

json solution_to_json(const ValueFunction& vf) {
  const Model& model = vf.model();
  const DerivedConstants& dc = model.consts;
  json j{{"regime", to_string(dc.regime)},
         {"params", to_json(model.params)},
         {"derived", to_json(dc)},
         {"kappa", number(dc.kappa)},
         {"theta", number(dc.theta)},
         {"eta", number(dc.eta)},
         {"lambda", number(dc.lambda_plus)},
         {"x_e", dc.x_e ? json(*dc.x_e) : json(nullptr)}};
  const ValueSolution* sol = vf.solution();
  if (!sol) {
    j["x_star"] = number(vf.x_star());
    j["closed_form"] = true;
    return j;
  }
  const DualTrajectory& tr = sol->trajectory;
  j["closed_form"] = false;
  j["x_star"] = sol->x_star;
  j["B"] = sol->umap.coefficient();
  j["c_star"] = sol->umap.c_star();
  j["y_star"] = sol->y_star;
  j["y_min"] = sol->y_min;
  j["shooting_residual"] = sol->residual;
  j["bisection_iterations"] = sol->iterations;
  j["bracket"] = {sol->bracket.lower, sol->bracket.upper};
  json events = json::array();
  for (const auto& e : tr.events) {
    events.push_back({{"kind", to_string(e.kind)}, {"y", e.y}, {"x", e.x}});
  }
  j["trajectory"] = {{"status", to_string(tr.status)},
                     {"rejected_steps", tr.rejected_steps},
                     {"y", tr.y},
                     {"v", tr.v},
                     {"v_y", tr.vy},
                     {"v_yy", tr.vyy},
                     {"events", events}};
  return j;
}

json run_manifest(const std::string& command, const Model& model,
                  const std::vector<std::uint64_t>& seeds) {
  return json{{"tool", "capcon"},
              {"tool_version", kToolVersion},
              {"command", command},
              {"params", to_json(model.params)},
              {"derived", to_json(model.consts)},
              {"seeds", seeds}};
}

std::vector<TableRow> make_table(const ValueFunction& vf, double x_min,
                                 double x_max, int points, bool log_spacing) {
  if (points < 1 || !(x_min > 0) || !(x_max >= x_min) ||
      (points > 1 && !(x_max > x_min))) {
    std::ostringstream msg;
    msg << "table needs 0 < xmin < xmax and points >= 1 (got xmin=" << x_min
        << ", xmax=" << x_max << ", points=" << points << ")";
    throw Error(ErrorCode::Domain, msg.str());
  }
  std::vector<TableRow> rows;
  rows.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    double x = x_min;
    if (points > 1) {
      const double s = double(i) / (points - 1);
      x = log_spacing ? x_min * std::pow(x_max / x_min, s)
                      : x_min + (x_max - x_min) * s;
      if (i + 1 == points) x = x_max;
    }
    const ValuePoint pt = vf.evaluate(x);
    const PolicyPoint pp = vf.policy(x);
    rows.push_back({x, pt.v, pt.vx, pt.vxx, pp.c, pp.pi, pt.region});
  }
  return rows;
}

void write_table_csv(std::ostream& out, const std::vector<TableRow>& rows) {
  out.precision(17);
  out << "x,V,Vx,Vxx,c_star,pi_star,region\n";
  for (const auto& r : rows) {
    out << r.x << ',' << r.v << ',' << r.vx << ',' << r.vxx << ',' << r.c
        << ',' << r.pi << ',' << to_string(r.region) << '\n';
  }
}

json table_to_json(const std::vector<TableRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"x", r.x},
                   {"V", r.v},
                   {"Vx", r.vx},
                   {"Vxx", r.vxx},
                   {"c_star", r.c},
                   {"pi_star", r.pi},
                   {"region", to_string(r.region)}});
  }
  return arr;
}

}  // namespace capcon
