#include "pathcalc/serialize.hpp"

#include <cmath>
#include <limits>

#include "pathcalc/error.hpp"

namespace pathcalc {

namespace {

const Json& require(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(what + ": missing \"" + key + "\"");
  }
  return j.at(key);
}

double get_double(const Json& j, const char* key, const std::string& what) {
  const Json& v = require(j, key, what);
  if (!v.is_number()) throw ConfigError(what + ": \"" + key + "\" must be a number");
  return v.get<double>();
}

double get_double(const Json& j, const char* key, double fallback, const std::string& what) {
  if (!j.contains(key)) return fallback;
  return get_double(j, key, what);
}

std::string get_kind(const Json& j, const std::string& what) {
  const Json& v = require(j, "kind", what);
  if (!v.is_string()) throw ConfigError(what + ": \"kind\" must be a string");
  return v.get<std::string>();
}

// Library validation errors inside a config are config errors.
template <typename Fn>
auto as_config(const std::string& what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const InvalidArgument& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

}  // namespace

FunctionSpec parse_function_spec(const Json& j) {
  FunctionSpec spec;
  if (j.is_string()) {
    spec.name = j.get<std::string>();
  } else if (j.is_object()) {
    const Json& name = require(j, "name", "function");
    if (!name.is_string()) throw ConfigError("function: \"name\" must be a string");
    spec.name = name.get<std::string>();
    if (j.contains("params")) {
      if (!j["params"].is_object()) throw ConfigError("function: \"params\" must be an object");
      for (const auto& [k, v] : j["params"].items()) {
        if (!v.is_number()) throw ConfigError("function: parameter \"" + k + "\" must be a number");
        spec.params[k] = v.get<double>();
      }
    }
    if (j.contains("lists")) {
      if (!j["lists"].is_object()) throw ConfigError("function: \"lists\" must be an object");
      for (const auto& [k, v] : j["lists"].items()) {
        if (!v.is_array()) throw ConfigError("function: list \"" + k + "\" must be an array");
        for (const auto& x : v) {
          if (!x.is_number()) throw ConfigError("function: list \"" + k + "\" holds a non-number");
          spec.lists[k].push_back(x.get<double>());
        }
      }
    }
  } else {
    throw ConfigError("function: expected a name or an object");
  }
  make_function(spec);  // resolves the name, throws ConfigError
  return spec;
}

JumpLaw parse_jump_law(const Json& j) {
  const std::string what = "jump_law";
  const std::string kind = get_kind(j, what);
  return as_config(what, [&] {
    if (kind == "two_point") {
      return JumpLaw::two_point(get_double(j, "p", what), get_double(j, "first", what),
                                get_double(j, "second", what));
    }
    if (kind == "uniform") return JumpLaw::uniform(get_double(j, "lo", what), get_double(j, "hi", what));
    if (kind == "normal") return JumpLaw::normal(get_double(j, "mean", what), get_double(j, "sd", what));
    throw ConfigError("jump_law: unknown kind \"" + kind + "\"");
  });
}

PathModel parse_path_model(const Json& j) {
  const std::string what = "model";
  const std::string kind = get_kind(j, what);
  return as_config(what, [&] {
    PathModel m;
    if (kind == "brownian") {
      m = PathModel::brownian(get_double(j, "sigma", 1.0, what), get_double(j, "drift", 0.0, what),
                              get_double(j, "start", 0.0, what));
    } else if (kind == "compound_poisson") {
      m = PathModel::compound_poisson(get_double(j, "rate", what),
                                      parse_jump_law(require(j, "jump_law", what)),
                                      get_double(j, "start", 0.0, what));
    } else if (kind == "jump_diffusion") {
      m = PathModel::jump_diffusion(get_double(j, "sigma", 1.0, what), get_double(j, "drift", 0.0, what),
                                    get_double(j, "rate", what),
                                    parse_jump_law(require(j, "jump_law", what)),
                                    get_double(j, "start", 0.0, what));
    } else if (kind == "finite_variation") {
      const Json& knots = require(j, "knots", what);
      if (!knots.is_array()) throw ConfigError("model: \"knots\" must be an array of [t, x]");
      std::vector<Knot> ks;
      for (const auto& k : knots) {
        if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number()) {
          throw ConfigError("model: each knot must be [t, x]");
        }
        ks.push_back({k[0].get<double>(), k[1].get<double>()});
      }
      m = PathModel::finite_variation(std::move(ks));
    } else {
      throw ConfigError("model: unknown kind \"" + kind + "\"");
    }
    m.validate();
    return m;
  });
}

IncreasingProcessModel parse_increasing_model(const Json& j) {
  const std::string what = "increasing process";
  const std::string kind = get_kind(j, what);
  return as_config(what, [&] {
    if (kind == "poisson_counting") return IncreasingProcessModel::poisson_counting(get_double(j, "rate", what));
    if (kind == "compound_poisson_increasing") {
      return IncreasingProcessModel::compound_poisson_increasing(
          get_double(j, "rate", what), parse_jump_law(require(j, "jump_law", what)));
    }
    if (kind == "path_qv") return IncreasingProcessModel::path_qv(parse_path_model(require(j, "model", what)));
    if (kind == "deterministic") return IncreasingProcessModel::deterministic(get_double(j, "slope", what));
    throw UnsupportedModel("increasing process: unsupported kind \"" + kind + "\"");
  });
}

PredictableSpec parse_integrand(const Json& j) {
  const std::string what = "integrand";
  const std::string kind = get_kind(j, what);
  return as_config(what, [&] {
    if (kind == "constant") return PredictableSpec::constant(get_double(j, "c", what));
    if (kind == "indicator_before") return PredictableSpec::indicator_before(get_double(j, "tau", what));
    if (kind == "left_limit_function") {
      return PredictableSpec::left_limit_function(make_function(parse_function_spec(require(j, "h", what))),
                                                  get_double(j, "bound", what));
    }
    throw ConfigError("integrand: unknown kind \"" + kind + "\"");
  });
}

PathFunctional parse_functional(const Json& j) {
  const std::string what = "functional";
  const std::string kind = get_kind(j, what);
  bool left_limit = false;
  if (j.contains("left_limit")) {
    if (!j["left_limit"].is_boolean()) throw ConfigError("functional: \"left_limit\" must be a boolean");
    left_limit = j["left_limit"].get<bool>();
  }
  auto fn = [&](const char* key) { return make_function(parse_function_spec(require(j, key, what))); };
  TwoIndexFn base = [&] {
    if (kind == "quadratic") return TwoIndexFn::quadratic();
    if (kind == "hat") return TwoIndexFn::hat(fn("f"));
    if (kind == "weighted_hat") return TwoIndexFn::weighted_hat(fn("g"), fn("f"));
    if (kind == "star") return TwoIndexFn::star(fn("f"), fn("g"));
    throw ConfigError("functional: unknown kind \"" + kind + "\"");
  }();
  return PathFunctional(std::move(base), left_limit);
}

SchemeSpec parse_scheme(const Json& j) {
  SchemeSpec s;
  const Json& name = j.is_string() ? j : require(j, "scheme", "scheme");
  if (!name.is_string()) throw ConfigError("scheme: expected a name");
  const std::string n = name.get<std::string>();
  if (n == "dyadic") {
    s.scheme = GridScheme::kDyadic;
  } else if (n == "hitting_times") {
    s.scheme = GridScheme::kHittingTimes;
  } else {
    throw ConfigError("scheme: unknown \"" + n + "\"");
  }
  if (j.is_object()) s.hitting_scale = get_double(j, "hitting_scale", 1.0, "scheme");
  if (!(s.hitting_scale > 0.0) || !std::isfinite(s.hitting_scale)) {
    throw ConfigError("scheme: hitting_scale must be > 0");
  }
  return s;
}

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

double read_number(const Json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw FormatError("expected a number, got " + std::string(j.type_name()));
  return j.get<double>();
}

Json numbers(std::span<const double> xs) {
  Json a = Json::array();
  for (double x : xs) a.push_back(number(x));
  return a;
}

std::vector<double> read_numbers(const Json& j) {
  if (!j.is_array()) throw FormatError("expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) out.push_back(read_number(x));
  return out;
}

Json to_json(const VerdictRecord& v) {
  Json checks = Json::array();
  for (const auto& c : v.checks) {
    checks.push_back({{"name", c.name}, {"value", number(c.value)}, {"threshold", number(c.threshold)},
                      {"pass", c.pass}, {"detail", c.detail}});
  }
  return {{"subject", v.subject}, {"pass", v.pass()}, {"checks", checks}};
}

Json to_json(const ReportStats& s) {
  return {{"applicable", s.applicable},
          {"reason", s.reason},
          {"path_jumps", s.path_jumps},
          {"max_abs_gap", number(s.max_abs_gap)},
          {"max_abs_residual", number(s.max_abs_residual)},
          {"residual_start", number(s.residual_start)},
          {"min_increment", number(s.min_increment)},
          {"max_jump", number(s.max_jump)},
          {"bracket_defect", number(s.bracket_defect)},
          {"bracket_defect_sd", number(s.bracket_defect_sd)}};
}

ReportStats report_stats_from_json(const Json& j) {
  try {
    ReportStats s;
    s.applicable = j.at("applicable").get<bool>();
    s.reason = j.at("reason").get<std::string>();
    s.path_jumps = j.at("path_jumps").get<std::size_t>();
    s.max_abs_gap = read_number(j.at("max_abs_gap"));
    s.max_abs_residual = read_number(j.at("max_abs_residual"));
    s.residual_start = read_number(j.at("residual_start"));
    s.min_increment = read_number(j.at("min_increment"));
    s.max_jump = read_number(j.at("max_jump"));
    s.bracket_defect = read_number(j.at("bracket_defect"));
    s.bracket_defect_sd = read_number(j.at("bracket_defect_sd"));
    return s;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("report stats: ") + e.what());
  }
}

Json series_json(const DecompositionReport& r) {
  Json jumps = Json::array();
  for (const auto& j : r.jumps) {
    jumps.push_back({{"index", j.index}, {"time", j.time}, {"size", j.size},
                     {"term", number(j.term)}, {"residual_jump", number(j.residual_jump)}});
  }
  return {{"applicable", r.applicable},
          {"reason", r.reason},
          {"bracket_defect_sd", number(r.bracket_defect_sd)},
          {"time", numbers(r.times)},
          {"lhs", numbers(r.lhs)},
          {"stochastic_integral", numbers(r.stochastic_integral)},
          {"compensator_term", numbers(r.compensator_term)},
          {"compensator_closed_form", numbers(r.compensator_closed_form)},
          {"jump_term", numbers(r.jump_term)},
          {"residual", numbers(r.residual)},
          {"identity_gap", numbers(r.identity_gap)},
          {"jumps", jumps}};
}

ReportStats stats_from_series(const Json& series) {
  try {
    ReportStats s;
    s.applicable = series.at("applicable").get<bool>();
    s.reason = series.at("reason").get<std::string>();
    if (!s.applicable) return s;
    const auto lhs = read_numbers(series.at("lhs"));
    const auto si = read_numbers(series.at("stochastic_integral"));
    const auto comp = read_numbers(series.at("compensator_term"));
    const auto cf = read_numbers(series.at("compensator_closed_form"));
    const auto jt = read_numbers(series.at("jump_term"));
    const auto res = read_numbers(series.at("residual"));
    const std::size_t n = lhs.size();
    if (n == 0 || si.size() != n || comp.size() != n || cf.size() != n || jt.size() != n ||
        res.size() != n || read_numbers(series.at("time")).size() != n) {
      throw FormatError("report series: columns differ in length");
    }
    DecompositionReport r;
    r.residual = res;
    r.compensator_term = comp;
    r.compensator_closed_form = cf;
    for (std::size_t k = 0; k < n; ++k) {
      // same association as the report itself
      r.identity_gap.push_back(lhs[k] - (si[k] + comp[k] + jt[k] + res[k]));
    }
    for (const auto& j : series.at("jumps")) {
      JumpRecord jr;
      jr.residual_jump = read_number(j.at("residual_jump"));
      r.jumps.push_back(jr);
    }
    r.bracket_defect_sd = read_number(series.at("bracket_defect_sd"));
    return summarize(r);
  } catch (const Json::exception& e) {
    throw FormatError(std::string("report series: ") + e.what());
  }
}

Json to_json(const CompensatorVerdict& v) {
  return {{"model", v.model},
          {"integrand", v.integrand},
          {"n_paths", v.n_paths},
          {"horizon", v.horizon},
          {"rate_used", v.rate_used},
          {"mean_y_da", number(v.mean_y_da)},
          {"se_y_da", number(v.se_y_da)},
          {"mean_y_dap", number(v.mean_y_dap)},
          {"se_y_dap", number(v.se_y_dap)},
          {"difference", number(v.difference)},
          {"combined_se", number(v.combined_se)},
          {"paired_se", number(v.paired_se)},
          {"verdict", to_json(v.verdict)}};
}

Json to_json(const MartingaleVerdict& v) {
  Json inc = Json::array();
  for (const auto& c : v.increments) {
    inc.push_back({{"s", c.s}, {"t", c.t}, {"mean", number(c.mean)}, {"se", number(c.se)}, {"pass", c.pass}});
  }
  return {{"model", v.model}, {"n_paths", v.n_paths}, {"rate_used", v.rate_used},
          {"increments", inc}, {"verdict", to_json(v.verdict)}};
}

Json to_json(const ConvergenceDiagnostic& d) {
  Json est = Json::array();
  for (const auto& per_scheme : d.estimates) {
    Json s = Json::array();
    for (const auto& per_level : per_scheme) s.push_back(numbers(per_level));
    est.push_back(s);
  }
  Json tails = Json::array();
  for (const auto& t : d.tail_probs) tails.push_back(numbers(t));
  return {{"levels", d.levels},       {"schemes", d.schemes},
          {"seeds", d.seeds},         {"estimates", est},
          {"tail_probs", tails},      {"cross_tail_prob", d.cross_tail_prob},
          {"eps", d.eps},             {"delta", d.delta},
          {"verdict", d.verdict},     {"notes", d.notes}};
}

}  // namespace pathcalc
