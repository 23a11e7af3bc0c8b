#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "capcon/mc_engine.hpp"
#include "capcon/market_model.hpp"
#include "capcon/value_function.hpp"

namespace capcon {

inline constexpr const char* kToolVersion = "0.3.0";

/// Reads {r, mu, sigma, beta, p, k, ell}. Missing, non-numeric or unknown
/// keys raise Error(InvalidParameter).
ModelParams params_from_json(const nlohmann::json& j);
ModelParams load_params(const std::string& path);

nlohmann::json to_json(const ModelParams& params);
nlohmann::json to_json(const DerivedConstants& consts);
nlohmann::json to_json(const SimEstimate& estimate);
nlohmann::json to_json(const Comparison& comparison);

/// Free boundary, map coefficient, constants and the dual trajectory (or
/// the closed-form description outside the free-boundary regime).
nlohmann::json solution_to_json(const ValueFunction& vf);

/// Everything that identifies a run except wall-clock time, so that equal
/// inputs give equal bytes.
nlohmann::json run_manifest(const std::string& command, const Model& model,
                            const std::vector<std::uint64_t>& seeds = {});

struct TableRow {
  double x = 0.0;
  double v = 0.0;
  double vx = 0.0;
  double vxx = 0.0;
  double c = 0.0;
  double pi = 0.0;
  Region region = Region::U;
};

/// `points` wealth levels from x_min to x_max (log spacing if requested).
std::vector<TableRow> make_table(const ValueFunction& vf, double x_min,
                                 double x_max, int points, bool log_spacing);
void write_table_csv(std::ostream& out, const std::vector<TableRow>& rows);
nlohmann::json table_to_json(const std::vector<TableRow>& rows);

}  // namespace capcon
