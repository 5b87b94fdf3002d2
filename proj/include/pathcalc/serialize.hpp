#pragma once

#include <json.hpp>

#include "pathcalc/catalog.hpp"
#include "pathcalc/compensator.hpp"
#include "pathcalc/decomposition.hpp"
#include "pathcalc/path.hpp"
#include "pathcalc/riemann.hpp"
#include "pathcalc/verdict.hpp"

namespace pathcalc {

using Json = nlohmann::json;

// Config parsing. Malformed documents raise ConfigError naming the offending
// key; unknown increasing-process kinds raise UnsupportedModel.
FunctionSpec parse_function_spec(const Json& j);
JumpLaw parse_jump_law(const Json& j);
PathModel parse_path_model(const Json& j);
IncreasingProcessModel parse_increasing_model(const Json& j);
PredictableSpec parse_integrand(const Json& j);
PathFunctional parse_functional(const Json& j);
SchemeSpec parse_scheme(const Json& j);

// NaN and infinities are written as null and read back as NaN.
Json number(double x);
double read_number(const Json& j);
Json numbers(std::span<const double> xs);
std::vector<double> read_numbers(const Json& j);

Json to_json(const VerdictRecord& v);
Json to_json(const ReportStats& s);
ReportStats report_stats_from_json(const Json& j);
// Term series and jump records of a report.
Json series_json(const DecompositionReport& r);
// Stats of the finest level recomputed from a persisted series; the
// identity gap is re-derived from the term columns.
ReportStats stats_from_series(const Json& series);
Json to_json(const CompensatorVerdict& v);
Json to_json(const MartingaleVerdict& v);
Json to_json(const ConvergenceDiagnostic& d);

}  // namespace pathcalc
