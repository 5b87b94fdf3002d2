#include "pathcalc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "pathcalc/catalog.hpp"
#include "pathcalc/error.hpp"
#include "pathcalc/numeric.hpp"
#include "pathcalc/parallel.hpp"
#include "pathcalc/philox.hpp"
#include "pathcalc/real_line.hpp"

namespace pathcalc {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kUnit = 0x1p-53;

std::string fmt(double x, const char* spec = "%.3g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

// --- config access ---------------------------------------------------------

const Json& section(const Json& doc, const char* key) {
  static const Json empty = Json::object();
  if (!doc.contains(key)) return empty;
  if (!doc[key].is_object()) throw ConfigError(std::string("\"") + key + "\" must be an object");
  return doc[key];
}

const Json& required(const Json& doc, const char* key) {
  if (!doc.contains(key)) throw ConfigError(std::string("config: missing \"") + key + "\"");
  return doc[key];
}

double opt_double(const Json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw ConfigError(std::string("\"") + key + "\" must be a number");
  return obj[key].get<double>();
}

long long opt_int(const Json& obj, const char* key, long long fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) throw ConfigError(std::string("\"") + key + "\" must be an integer");
  return obj[key].get<long long>();
}

std::size_t opt_count(const Json& obj, const char* key, std::size_t fallback, std::size_t min = 0) {
  const long long v = opt_int(obj, key, static_cast<long long>(fallback));
  if (v < static_cast<long long>(min)) {
    throw ConfigError(std::string("\"") + key + "\" must be >= " + std::to_string(min));
  }
  return static_cast<std::size_t>(v);
}

std::size_t default_steps(const ExperimentConfig& c, int extra = 0) {
  const int top = c.levels.empty() ? 10 : *std::max_element(c.levels.begin(), c.levels.end());
  return std::size_t{1} << std::clamp(top + extra, 1, 24);
}

double max_finite(double a, double b) { return std::isnan(b) ? b : std::max(a, b); }

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  out << text;
  if (!out) throw ConfigError("cannot write " + file.string());
}

Json read_json(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("cannot open " + file.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(file.string() + ": " + e.what());
  }
}

// --- suites ----------------------------------------------------------------

class Suite {
 public:
  virtual ~Suite() = default;
  virtual std::size_t count() const = 0;
  // Record for index p. With dir set the record carries its full detail and
  // path files are written there.
  virtual Json compute(std::size_t p, std::uint64_t seed, const fs::path* dir) const = 0;
  // Recompute derived numbers of a record from its persisted detail.
  virtual void rederive(Json&) const {}
  virtual VerdictRecord seed_verdict(const Json&) const { return {}; }
  virtual VerdictRecord evaluate(const std::vector<Json>& records) const = 0;
};

SchemeSpec scheme_of(const Json& doc) {
  return doc.contains("scheme") ? parse_scheme(doc["scheme"]) : SchemeSpec{};
}

void write_path(const SamplePath& path, const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  write_path_csv(path, out);
  if (!out) throw ConfigError("cannot write " + file.string());
}

// -- qv

class QVSuite : public Suite {
 public:
  explicit QVSuite(const ExperimentConfig& c)
      : c_(c), model_(parse_path_model(required(c.document, "model"))), scheme_(scheme_of(c.document)) {
    if (c.levels.empty()) throw ConfigError("qv: \"levels\" must not be empty");
    n_steps_ = opt_count(c.document, "n_steps", default_steps(c), 1);
    horizon_ = opt_double(c.document, "horizon", 1.0);
    const auto& tol = section(c.document, "tolerances");
    const BracketModel b = BracketModel::from_model(model_);
    const double expected = b.total(horizon_);
    lo_ = expected > 0 ? 0.95 * expected : -0.05;
    hi_ = expected > 0 ? 1.05 * expected : 0.05;
    if (tol.contains("band")) {
      const auto& band = tol["band"];
      if (!band.is_array() || band.size() != 2 || !band[0].is_number() || !band[1].is_number()) {
        throw ConfigError("qv: \"band\" must be [lo, hi]");
      }
      lo_ = band[0].get<double>();
      hi_ = band[1].get<double>();
    }
    cauchy_tol_ = opt_double(tol, "cauchy_tol", 0.05);
  }

  std::size_t count() const override { return c_.n_paths; }

  Json compute(std::size_t p, std::uint64_t seed, const fs::path* dir) const override {
    const auto path = simulate(model_, n_steps_, horizon_, seed);
    if (dir) write_path(path, *dir / "paths.csv");
    std::vector<double> qv;
    std::string note;
    for (int level : c_.levels) {
      try {
        qv.push_back(realized_qv(path, grid_at_level(path, scheme_.scheme, level, scheme_.hitting_scale)));
      } catch (const ResolutionExhausted& e) {
        qv.push_back(kNaN);
        if (note.empty()) note = e.what();
      }
    }
    return {{"index", p}, {"seed", seed}, {"qv", numbers(qv)}, {"note", note}};
  }

  VerdictRecord evaluate(const std::vector<Json>& records) const override {
    VerdictRecord v;
    v.subject = "realized QV, " + model_.describe();
    const std::size_t nl = c_.levels.size();
    std::vector<std::vector<double>> qv(nl);
    std::size_t unresolved = 0;
    for (const auto& r : records) {
      const auto q = read_numbers(r.at("qv"));
      if (q.size() != nl) throw FormatError("qv record: wrong number of levels");
      for (std::size_t l = 0; l < nl; ++l) qv[l].push_back(q[l]);
      unresolved += !r.at("note").get<std::string>().empty();
    }
    const auto fine = sample_stats(qv.back());
    v.add("E[QV]_" + fmt(horizon_) + " in [" + fmt(lo_) + "," + fmt(hi_) + "]", fine.mean, hi_,
          fine.mean >= lo_ && fine.mean <= hi_, "level " + std::to_string(c_.levels.back()) +
                                                    ", se " + fmt(fine.std_error()));
    if (nl >= 2) {
      std::vector<double> steps;
      for (std::size_t l = 0; l + 1 < nl; ++l) {
        std::vector<double> d;
        for (std::size_t p = 0; p < qv[l].size(); ++p) d.push_back(std::abs(qv[l + 1][p] - qv[l][p]));
        steps.push_back(sample_stats(d).mean);
      }
      v.add("Cauchy trace: mean |QV step| at the finest level", steps.back(), cauchy_tol_,
            steps.back() <= cauchy_tol_);
      if (nl >= 3) {
        v.add("Cauchy trace contracts", steps.back(), steps.front(), steps.back() <= steps.front());
      }
    }
    v.add("unresolved grids", static_cast<double>(unresolved), 0, unresolved == 0);
    return v;
  }

 private:
  const ExperimentConfig& c_;
  PathModel model_;
  SchemeSpec scheme_;
  std::size_t n_steps_ = 0;
  double horizon_ = 1.0;
  double lo_ = 0, hi_ = 0, cauchy_tol_ = 0.05;
};

// -- ito / tanaka

class DecompositionSuite : public Suite {
 public:
  DecompositionSuite(const ExperimentConfig& c, DecompositionMode mode)
      : c_(c),
        mode_(mode),
        f_(make_function(parse_function_spec(required(c.document, "function")))),
        model_(parse_path_model(required(c.document, "model"))),
        scheme_(scheme_of(c.document)) {
    if (c.levels.empty()) throw ConfigError(std::string(to_string(mode)) + ": \"levels\" must not be empty");
    if (c.document.contains("g")) options_.g = make_function(parse_function_spec(c.document["g"]));
    n_steps_ = opt_count(c.document, "n_steps", default_steps(c), 1);
    horizon_ = opt_double(c.document, "horizon", 1.0);
    const auto& tol = section(c.document, "tolerances");
    verify_.tol = opt_double(tol, "tol", verify_.tol);
    verify_.increment_tol = opt_double(tol, "increment_tol", verify_.increment_tol);
    verify_.jump_tol = opt_double(tol, "jump_tol", verify_.jump_tol);
    verify_.gap_tol = opt_double(tol, "gap_tol", verify_.gap_tol);
    verify_.defect_slack_sd = opt_double(tol, "defect_slack_sd", verify_.defect_slack_sd);
    if (c.document.contains("oracle")) {
      const auto& o = section(c.document, "oracle");
      const std::string kind = o.value("kind", "");
      if (kind != "local_time") throw ConfigError("oracle: only \"local_time\" is supported");
      oracle_ = true;
      oracle_level_ = opt_double(o, "level", 0.0);
      oracle_eps_ = opt_double(o, "eps", 0.01);
      oracle_rel_tol_ = opt_double(o, "rel_tol", 0.1);
      if (o.contains("expected")) oracle_expected_ = opt_double(o, "expected", 0.0);
      if (!(oracle_eps_ > 0)) throw ConfigError("oracle: eps must be > 0");
    }
  }

  std::size_t count() const override { return c_.n_paths; }

  Json compute(std::size_t p, std::uint64_t seed, const fs::path* dir) const override {
    const auto path = simulate(model_, n_steps_, horizon_, seed);
    if (dir) write_path(path, *dir / "paths.csv");
    const BracketModel bracket = BracketModel::from_model(model_);
    Json levels = Json::array();
    Json rec = {{"index", p}, {"seed", seed}};
    DecompositionReport fine;
    for (int level : c_.levels) {
      try {
        const auto grid = grid_at_level(path, scheme_.scheme, level, scheme_.hitting_scale);
        fine = mode_ == DecompositionMode::kIto ? ito_decompose(path, f_, grid, bracket, options_)
                                                : tanaka_decompose(path, f_, grid, bracket, options_);
      } catch (const ResolutionExhausted& e) {
        fine = DecompositionReport{};
        fine.applicable = false;
        fine.reason = e.what();
      }
      levels.push_back(to_json(summarize(fine)));
    }
    rec["levels"] = levels;
    rec["terminal_residual"] = number(fine.applicable && !fine.residual.empty() ? fine.residual.back() : kNaN);
    if (oracle_) {
      double l = kNaN;
      try {
        l = local_time_oracle(path, oracle_level_, oracle_eps_);
      } catch (const ResolutionExhausted&) {
      }
      rec["oracle"] = number(l);
    }
    if (dir) rec["series"] = series_json(fine);
    return rec;
  }

  void rederive(Json& rec) const override {
    if (!rec.contains("series")) return;
    const Json& s = rec["series"];
    const ReportStats st = stats_from_series(s);
    if (!rec.at("levels").is_array() || rec["levels"].empty()) throw FormatError("report: no levels");
    rec["levels"].back() = to_json(st);
    const auto res = st.applicable ? read_numbers(s.at("residual")) : std::vector<double>{};
    rec["terminal_residual"] = number(res.empty() ? kNaN : res.back());
  }

  VerdictRecord seed_verdict(const Json& rec) const override {
    std::vector<ReportStats> levels;
    for (const auto& l : rec.at("levels")) levels.push_back(report_stats_from_json(l));
    if (levels.size() != c_.levels.size()) throw FormatError("report: wrong number of levels");
    VerdictRecord v = verify_stats(levels, mode_, verify_);
    v.subject = std::string(to_string(mode_)) + " " + f_.label() + " seed " +
                std::to_string(rec.at("seed").get<std::uint64_t>());
    return v;
  }

  VerdictRecord evaluate(const std::vector<Json>& records) const override {
    VerdictRecord v;
    v.subject = std::string(to_string(mode_)) + " " + f_.label() + ", " + model_.describe();
    std::size_t passing = 0, applicable = 0;
    double max_res = 0, max_gap = 0, min_inc = std::numeric_limits<double>::infinity(), max_jump = 0;
    std::vector<double> a_end, oracle, abs_err;
    for (const auto& r : records) {
      const auto sv = seed_verdict(r);
      passing += sv.pass();
      const auto fine = report_stats_from_json(r.at("levels").back());
      if (!fine.applicable) continue;
      ++applicable;
      for (const auto& l : r.at("levels")) {
        max_gap = max_finite(max_gap, report_stats_from_json(l).max_abs_gap);
      }
      max_res = max_finite(max_res, fine.max_abs_residual);
      min_inc = std::isnan(fine.min_increment) ? fine.min_increment : std::min(min_inc, fine.min_increment);
      max_jump = max_finite(max_jump, fine.max_jump);
      if (oracle_) {
        const double a = read_number(r.at("terminal_residual"));
        const double o = read_number(r.at("oracle"));
        a_end.push_back(a);
        oracle.push_back(o);
        abs_err.push_back(std::abs(a - o));
      }
    }
    const double n = static_cast<double>(records.size());
    v.add("seeds passing", static_cast<double>(passing), n, passing == records.size());
    v.add("applicable", static_cast<double>(applicable), n, applicable == records.size());
    v.add("max identity_gap", max_gap, verify_.gap_tol, max_gap <= verify_.gap_tol);
    if (mode_ == DecompositionMode::kIto) {
      v.add("max residual", max_res, verify_.tol, max_res <= verify_.tol);
    } else {
      v.add("min A increment", min_inc, -verify_.increment_tol, min_inc >= -verify_.increment_tol);
      v.add("max A jump", max_jump, verify_.jump_tol, max_jump <= verify_.jump_tol);
    }
    if (oracle_) {
      const auto so = sample_stats(oracle);
      const double rel = sample_stats(abs_err).mean / so.mean;
      v.add("mean relative error vs occupation oracle", rel, oracle_rel_tol_, rel <= oracle_rel_tol_,
            "mean |A_T - L| / mean L, eps " + fmt(oracle_eps_));
      if (oracle_expected_) {
        const double dev = std::abs(so.mean - *oracle_expected_);
        v.add("oracle mean vs expected", dev, 3 * so.std_error(), dev <= 3 * so.std_error(),
              "mean " + fmt(so.mean, "%.5g") + ", expected " + fmt(*oracle_expected_, "%.5g"));
      }
    }
    return v;
  }

 private:
  const ExperimentConfig& c_;
  DecompositionMode mode_;
  ScalarFn f_;
  PathModel model_;
  SchemeSpec scheme_;
  DecompositionOptions options_;
  VerifyOptions verify_;
  std::size_t n_steps_ = 0;
  double horizon_ = 1.0;
  bool oracle_ = false;
  double oracle_level_ = 0, oracle_eps_ = 0.01, oracle_rel_tol_ = 0.1;
  std::optional<double> oracle_expected_;
};

// -- compensator

class CompensatorSuite : public Suite {
 public:
  explicit CompensatorSuite(const ExperimentConfig& c) : c_(c) {
    const auto& s = section(c.document, "compensator");
    const Json& models = required(s, "models");
    const Json& ys = required(s, "integrands");
    if (!models.is_array() || models.empty()) throw ConfigError("compensator: \"models\" must be a non-empty array");
    if (!ys.is_array() || ys.empty()) throw ConfigError("compensator: \"integrands\" must be a non-empty array");
    for (const auto& m : models) models_.push_back(parse_increasing_model(m));
    for (const auto& y : ys) integrands_.push_back(parse_integrand(y));
    if (s.contains("negative_control")) {
      const auto& nc = section(s, "negative_control");
      neg_model_ = opt_count(nc, "model", 0);
      neg_integrand_ = opt_count(nc, "integrand", 0);
      neg_factor_ = opt_double(nc, "rate_factor", 1.2);
      if (neg_model_ >= models_.size() || neg_integrand_ >= integrands_.size()) {
        throw ConfigError("negative_control: index out of range");
      }
      if (neg_factor_ == 1.0) throw ConfigError("negative_control: rate_factor must differ from 1");
      negative_ = true;
    }
    n_steps_ = opt_count(c.document, "n_steps", 1024, 1);
    horizon_ = opt_double(c.document, "horizon", 1.0);
    slack_ = opt_double(section(c.document, "tolerances"), "slack_se", 3.0);
    if (c.n_paths < 2) throw ConfigError("compensator: need at least two paths");
  }

  std::size_t count() const override { return c_.n_paths; }

  Json compute(std::size_t p, std::uint64_t seed, const fs::path* dir) const override {
    Json pairs = Json::array();
    Json neg;
    for (std::size_t m = 0; m < models_.size(); ++m) {
      const auto path = simulate(models_[m].underlying(), n_steps_, horizon_, seed);
      if (dir) write_path(path, *dir / (m == 0 ? std::string("paths.csv") : "paths_" + std::to_string(m) + ".csv"));
      const double rate = compensator_rate(models_[m]);
      Json row = Json::array();
      for (std::size_t y = 0; y < integrands_.size(); ++y) {
        const auto s = compensator_sample(models_[m], integrands_[y], path, rate);
        row.push_back({number(s.y_da), number(s.y_dap)});
        if (negative_ && m == neg_model_ && y == neg_integrand_) {
          const auto w = compensator_sample(models_[m], integrands_[y], path, rate * neg_factor_);
          neg = {number(w.y_da), number(w.y_dap)};
        }
      }
      pairs.push_back(row);
    }
    Json rec = {{"index", p}, {"seed", seed}, {"pairs", pairs}};
    if (negative_) rec["negative"] = neg;
    return rec;
  }

  VerdictRecord evaluate(const std::vector<Json>& records) const override {
    VerdictRecord v;
    v.subject = "compensator contract";
    auto judge = [&](const std::vector<double>& da, const std::vector<double>& dap, double& diff) {
      const auto a = sample_stats(da), b = sample_stats(dap);
      diff = std::abs(a.mean - b.mean);
      return slack_ * std::hypot(a.std_error(), b.std_error());
    };
    for (std::size_t m = 0; m < models_.size(); ++m) {
      for (std::size_t y = 0; y < integrands_.size(); ++y) {
        std::vector<double> da, dap;
        for (const auto& r : records) {
          const auto& cell = r.at("pairs").at(m).at(y);
          da.push_back(read_number(cell.at(0)));
          dap.push_back(read_number(cell.at(1)));
        }
        double diff = 0;
        const double limit = judge(da, dap, diff);
        v.add("E int Y dA = E int Y dA^p: " + models_[m].describe() + ", " + integrands_[y].describe(),
              diff, limit, diff <= limit);
      }
    }
    if (negative_) {
      std::vector<double> da, dap;
      for (const auto& r : records) {
        da.push_back(read_number(r.at("negative").at(0)));
        dap.push_back(read_number(r.at("negative").at(1)));
      }
      double diff = 0;
      const double limit = judge(da, dap, diff);
      v.add("negative control (rate x" + fmt(neg_factor_) + ") detected", diff, limit, diff > limit,
            "must exceed the limit");
    }
    return v;
  }

 private:
  const ExperimentConfig& c_;
  std::vector<IncreasingProcessModel> models_;
  std::vector<PredictableSpec> integrands_;
  bool negative_ = false;
  std::size_t neg_model_ = 0, neg_integrand_ = 0;
  double neg_factor_ = 1.2;
  std::size_t n_steps_ = 1024;
  double horizon_ = 1.0;
  double slack_ = 3.0;
};

// -- independence

class IndependenceSuite : public Suite {
 public:
  explicit IndependenceSuite(const ExperimentConfig& c)
      : c_(c),
        functional_(parse_functional(required(c.document, "functional"))),
        model_(parse_path_model(required(c.document, "model"))) {
    if (c.levels.size() < 2) throw ConfigError("independence: need at least two levels");
    const Json& schemes = required(c.document, "schemes");
    if (!schemes.is_array() || schemes.size() < 2) throw ConfigError("independence: need at least two schemes");
    for (const auto& s : schemes) schemes_.push_back(parse_scheme(s));
    n_steps_ = opt_count(c.document, "n_steps", default_steps(c, 2), 1);
    horizon_ = opt_double(c.document, "horizon", 1.0);
    const auto& tol = section(c.document, "tolerances");
    eps_ = opt_double(tol, "eps", 0.05);
    delta_ = opt_double(tol, "delta", 0.05);
    if (!(eps_ > 0) || !(delta_ >= 0 && delta_ <= 1)) throw ConfigError("independence: bad eps or delta");
  }

  std::size_t count() const override { return c_.n_paths; }

  Json compute(std::size_t p, std::uint64_t seed, const fs::path* dir) const override {
    const auto path = simulate(model_, n_steps_, horizon_, seed);
    if (dir) write_path(path, *dir / "paths.csv");
    std::string note;
    const auto est = riemann_estimates(functional_, path, schemes_, c_.levels, &note);
    Json e = Json::array();
    for (const auto& s : est) e.push_back(numbers(s));
    return {{"index", p}, {"seed", seed}, {"estimates", e}, {"note", note}};
  }

  VerdictRecord evaluate(const std::vector<Json>& records) const override {
    ConvergenceDiagnostic d;
    d.levels = c_.levels;
    d.eps = eps_;
    d.delta = delta_;
    const std::size_t ns = schemes_.size(), nl = c_.levels.size();
    for (const auto& s : schemes_) d.schemes.push_back(to_string(s.scheme));
    d.estimates.assign(ns, std::vector<std::vector<double>>(nl));
    for (const auto& r : records) {
      const auto& e = r.at("estimates");
      if (e.size() != ns) throw FormatError("independence record: wrong number of schemes");
      for (std::size_t s = 0; s < ns; ++s) {
        const auto row = read_numbers(e[s]);
        if (row.size() != nl) throw FormatError("independence record: wrong number of levels");
        for (std::size_t l = 0; l < nl; ++l) d.estimates[s][l].push_back(row[l]);
      }
      const auto note = r.at("note").get<std::string>();
      if (!note.empty()) d.notes.push_back(note);
    }
    evaluate_convergence(d);
    VerdictRecord v;
    v.subject = "independence of " + functional_.label() + ", " + model_.describe();
    v.add("cross-scheme agreement within " + fmt(eps_) + " at the finest level", 1.0 - d.cross_tail_prob,
          1.0 - delta_, d.cross_tail_prob <= delta_);
    for (std::size_t s = 0; s < ns; ++s) {
      const double tp = d.tail_probs[s].back();
      v.add("Cauchy tail probability, " + d.schemes[s], tp, delta_, tp <= delta_);
    }
    v.add("unresolved grids", static_cast<double>(d.notes.size()), 0, d.notes.empty());
    return v;
  }

 private:
  const ExperimentConfig& c_;
  PathFunctional functional_;
  PathModel model_;
  std::vector<SchemeSpec> schemes_;
  std::size_t n_steps_ = 0;
  double horizon_ = 1.0;
  double eps_ = 0.05, delta_ = 0.05;
};

// -- summability

class SummabilitySuite : public Suite {
 public:
  explicit SummabilitySuite(const ExperimentConfig& c) : c_(c) {
    const Json& fns = required(c.document, "functions");
    if (!fns.is_array() || fns.empty()) throw ConfigError("summability: \"functions\" must be a non-empty array");
    for (const auto& f : fns) functions_.push_back(make_function(parse_function_spec(f)));
    const auto& iv = c.document.value("interval", Json::array({-3.0, 3.0}));
    if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() || !iv[1].is_number() ||
        !(iv[0].get<double>() + 0.2 < iv[1].get<double>())) {
      throw ConfigError("summability: \"interval\" must be [lo, hi] with hi - lo > 0.2");
    }
    lo_ = iv[0].get<double>();
    hi_ = iv[1].get<double>();
    max_points_ = opt_count(c.document, "max_points", 64, 1);
    if (c.document.contains("additivity")) {
      const auto& a = section(c.document, "additivity");
      additive_ = parse_functional(required(a, "functional")).base();
      additivity_draws_ = opt_count(a, "draws", 25);
      additivity_tol_ = opt_double(a, "tol", 1e-4);
    }
  }

  std::size_t count() const override { return c_.n_paths; }

  Json compute(std::size_t p, std::uint64_t seed, const fs::path*) const override {
    PhiloxEngine eng(seed);
    const auto& f = functions_[static_cast<std::size_t>(eng() % functions_.size())];
    const double a = lo_ + 0.5 * (hi_ - lo_) * eng.uniform();
    const double b = a + 0.1 + (hi_ - a - 0.1) * eng.uniform();
    std::vector<double> pts(1 + eng() % max_points_);
    for (auto& x : pts) x = a + (b - a) * (0.001 + 0.998 * eng.uniform());
    std::sort(pts.begin(), pts.end());
    const Partition part(a, b, pts);
    const auto F = TwoIndexFn::hat(f);
    Json rec = {{"index", p},
                {"seed", seed},
                {"function", f.label()},
                {"a", a},
                {"b", b},
                {"points", pts.size()},
                {"sum", number(partition_sum(F, part))},
                {"target", number(f(b) - f(a))},
                {"abs_sum", number(partition_abs_sum(F, part))}};
    if (additive_ && p < additivity_draws_) {
      const double t = a + (b - a) * (0.1 + 0.8 * eng.uniform());
      const auto scheme = RefinementScheme::dyadic();
      const auto whole = summability_limit(*additive_, a, b, scheme, additivity_tol_);
      const auto left = summability_limit(*additive_, a, t, scheme, additivity_tol_);
      const auto right = summability_limit(*additive_, t, b, scheme, additivity_tol_);
      rec["additivity"] = {{"t", t},
                           {"whole", number(whole.estimate)},
                           {"left", number(left.estimate)},
                           {"right", number(right.estimate)},
                           {"converged", whole.converged && left.converged && right.converged}};
    }
    return rec;
  }

  VerdictRecord evaluate(const std::vector<Json>& records) const override {
    VerdictRecord v;
    v.subject = "telescoping and additivity";
    double worst = 0;
    double defect = 0;
    std::size_t additivity = 0, unconverged = 0;
    for (const auto& r : records) {
      const double sum = read_number(r.at("sum")), target = read_number(r.at("target"));
      const double scale = 4 * kUnit * (read_number(r.at("abs_sum")) + std::abs(target));
      worst = max_finite(worst, std::abs(sum - target) / std::max(scale, 1e-300));
      if (r.contains("additivity")) {
        const auto& a = r["additivity"];
        ++additivity;
        unconverged += !a.at("converged").get<bool>();
        defect = max_finite(defect, std::abs(read_number(a.at("whole")) - read_number(a.at("left")) -
                                             read_number(a.at("right"))));
      }
    }
    v.add("telescoping error in units of 4u (sum |terms|)", worst, 1.0, worst <= 1.0,
          std::to_string(records.size()) + " draws");
    if (additive_) {
      v.add("additivity defect", defect, 2 * additivity_tol_,
            defect <= 2 * additivity_tol_ && unconverged == 0,
            std::to_string(additivity) + " splits, " + std::to_string(unconverged) + " unconverged");
    }
    return v;
  }

 private:
  const ExperimentConfig& c_;
  std::vector<ScalarFn> functions_;
  double lo_ = -3, hi_ = 3;
  std::size_t max_points_ = 64;
  std::optional<TwoIndexFn> additive_;
  std::size_t additivity_draws_ = 25;
  double additivity_tol_ = 1e-4;
};

// -- taylor

class TaylorSuite : public Suite {
 public:
  explicit TaylorSuite(const ExperimentConfig& c) : c_(c) {
    if (c.document.contains("cases")) {
      const Json& cases = c.document["cases"];
      if (!cases.is_array()) throw ConfigError("taylor: \"cases\" must be an array");
      for (const auto& k : cases) {
        Case cs{make_function(parse_function_spec(required(k, "function"))), opt_double(k, "a", 0.0),
                opt_double(k, "b", 1.0), static_cast<int>(opt_int(k, "order", 2))};
        if (!(cs.a < cs.b) || cs.order < 1) throw ConfigError("taylor case: need a < b and order >= 1");
        cases_.push_back(std::move(cs));
      }
    }
    if (c.document.contains("random_polynomials")) {
      const auto& r = section(c.document, "random_polynomials");
      max_degree_ = static_cast<int>(opt_int(r, "max_degree", 4));
      if (max_degree_ < 1 || max_degree_ > 8) throw ConfigError("random_polynomials: max_degree in 1..8");
      random_ = c.n_paths;
    }
    if (cases_.empty() && random_ == 0) throw ConfigError("taylor: no cases and no random polynomials");
    const auto& tol = section(c.document, "tolerances");
    options_.gap_tol = opt_double(tol, "gap_tol", options_.gap_tol);
    options_.bound_rel_tol = opt_double(tol, "bound_rel_tol", options_.bound_rel_tol);
  }

  std::size_t count() const override { return cases_.size() + random_; }

  Json compute(std::size_t p, std::uint64_t seed, const fs::path*) const override {
    Case cs;
    if (p < cases_.size()) {
      cs = cases_[p];
    } else {
      PhiloxEngine eng(seed);
      const int degree = 1 + static_cast<int>(eng() % static_cast<unsigned>(max_degree_));
      std::vector<double> coef(static_cast<std::size_t>(degree + 1));
      for (auto& x : coef) x = 2.0 * eng.uniform() - 1.0;
      cs.f = make_function(FunctionSpec{"polynomial", {}, {{"coefficients", coef}}});
      cs.a = -1.0 + eng.uniform();
      cs.b = cs.a + 0.2 + eng.uniform();
      cs.order = degree;
    }
    const auto r = taylor_check(TwoIndexFn::hat(cs.f), cs.a, cs.b, cs.order, options_);
    Json terms = Json::array();
    for (const auto& [j, t] : r.terms) terms.push_back({j, number(t)});
    return {{"index", p},          {"seed", seed},
            {"function", cs.f.label()}, {"a", cs.a},
            {"b", cs.b},           {"order", cs.order},
            {"applicable", r.applicable}, {"reason", r.reason},
            {"integral", number(r.integral)}, {"terms", terms},
            {"remainder", number(r.remainder)}, {"identity_gap", number(r.identity_gap)},
            {"sup_ratio", number(r.sup_ratio)}, {"remainder_bound", number(r.remainder_bound)}};
  }

  VerdictRecord evaluate(const std::vector<Json>& records) const override {
    VerdictRecord v;
    v.subject = "Taylor expansions";
    std::size_t applicable = 0;
    double gap = 0, ratio = 0;
    for (const auto& r : records) {
      if (!r.at("applicable").get<bool>()) continue;
      ++applicable;
      // re-derive the gap from the persisted terms
      CompensatedSum terms;
      for (const auto& t : r.at("terms")) terms += read_number(t.at(1));
      const double integral = read_number(r.at("integral")), rem = read_number(r.at("remainder"));
      gap = max_finite(gap, std::abs(integral - terms.value() - rem));
      const double bound = read_number(r.at("remainder_bound")) * (1 + options_.bound_rel_tol) +
                           options_.bound_rel_tol;
      ratio = max_finite(ratio, std::abs(rem) / bound);
    }
    const double n = static_cast<double>(records.size());
    v.add("applicable cases", static_cast<double>(applicable), n, applicable == records.size());
    v.add("max identity_gap", gap, options_.gap_tol, gap < options_.gap_tol);
    v.add("remainder / bound", ratio, 1.0, ratio <= 1.0);
    return v;
  }

 private:
  struct Case {
    ScalarFn f;
    double a = 0, b = 1;
    int order = 2;
  };
  const ExperimentConfig& c_;
  std::vector<Case> cases_;
  std::size_t random_ = 0;
  int max_degree_ = 4;
  TaylorOptions options_;
};

std::unique_ptr<Suite> make_suite(const ExperimentConfig& c) {
  switch (c.kind) {
    case ExperimentKind::kSummability: return std::make_unique<SummabilitySuite>(c);
    case ExperimentKind::kTaylor: return std::make_unique<TaylorSuite>(c);
    case ExperimentKind::kQV: return std::make_unique<QVSuite>(c);
    case ExperimentKind::kIto: return std::make_unique<DecompositionSuite>(c, DecompositionMode::kIto);
    case ExperimentKind::kTanaka: return std::make_unique<DecompositionSuite>(c, DecompositionMode::kTanaka);
    case ExperimentKind::kCompensator: return std::make_unique<CompensatorSuite>(c);
    case ExperimentKind::kIndependence: return std::make_unique<IndependenceSuite>(c);
  }
  throw ConfigError("unknown experiment kind");
}

std::string seed_summary(const Suite& suite, const Json& rec) {
  const VerdictRecord v = suite.seed_verdict(rec);
  if (!v.checks.empty()) return summary_text(v);
  std::ostringstream out;
  for (const auto& [k, x] : rec.items()) {
    if (x.is_primitive()) out << k << " " << x.dump() << "\n";
  }
  return out.str();
}

Json strip_detail(Json rec) {
  rec.erase("series");
  return rec;
}

}  // namespace

const char* to_string(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::kSummability: return "summability";
    case ExperimentKind::kTaylor: return "taylor";
    case ExperimentKind::kQV: return "qv";
    case ExperimentKind::kIto: return "ito";
    case ExperimentKind::kTanaka: return "tanaka";
    case ExperimentKind::kCompensator: return "compensator";
    case ExperimentKind::kIndependence: return "independence";
  }
  return "?";
}

std::optional<ExperimentKind> experiment_kind(const std::string& name) {
  for (auto k : {ExperimentKind::kSummability, ExperimentKind::kTaylor, ExperimentKind::kQV,
                 ExperimentKind::kIto, ExperimentKind::kTanaka, ExperimentKind::kCompensator,
                 ExperimentKind::kIndependence}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

ExperimentConfig parse_config(Json doc, const Overrides& overrides) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (!doc.contains("schema_version")) throw ConfigError("config: missing \"schema_version\"");
  if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != kSchemaVersion) {
    throw FormatError("config: unsupported schema_version " + doc["schema_version"].dump() +
                      " (expected " + std::to_string(kSchemaVersion) + ")");
  }
  const Json& kind = required(doc, "experiment");
  if (!kind.is_string()) throw ConfigError("config: \"experiment\" must be a string");
  const auto k = experiment_kind(kind.get<std::string>());
  if (!k) throw ConfigError("config: unknown experiment \"" + kind.get<std::string>() + "\"");

  // seeds: {"base", "count"} or "seed" / "n_paths"
  if (doc.contains("seeds")) {
    const auto& s = section(doc, "seeds");
    if (s.contains("base")) doc["seed"] = s["base"];
    if (s.contains("count")) {
      if (doc.contains("n_paths") && doc["n_paths"] != s["count"]) {
        throw ConfigError("config: seeds.count and n_paths disagree");
      }
      doc["n_paths"] = s["count"];
    }
    doc.erase("seeds");
  }
  if (overrides.seed) doc["seed"] = *overrides.seed;
  if (overrides.paths) doc["n_paths"] = *overrides.paths;
  if (overrides.out) doc["output_dir"] = *overrides.out;
  if (overrides.level && doc.contains("levels") && doc["levels"].is_array() && !doc["levels"].empty()) {
    std::vector<int> lv;
    for (const auto& l : doc["levels"]) {
      if (!l.is_number_integer()) throw ConfigError("config: levels must be integers");
      lv.push_back(l.get<int>());
    }
    const int shift = *overrides.level - *std::max_element(lv.begin(), lv.end());
    std::vector<int> shifted;
    for (int l : lv) {
      if (l + shift >= 1) shifted.push_back(l + shift);
    }
    doc["levels"] = shifted;
  } else if (overrides.level) {
    doc["levels"] = Json::array({*overrides.level});
  }

  ExperimentConfig c;
  c.kind = *k;
  c.name = doc.value("name", std::string(to_string(*k)));
  if (c.name.empty() || c.name.find('/') != std::string::npos || c.name == "." || c.name == "..") {
    throw ConfigError("config: bad name \"" + c.name + "\"");
  }
  const long long seed = opt_int(doc, "seed", 1);
  if (seed < 0) throw ConfigError("config: seed must be >= 0");
  c.base_seed = static_cast<std::uint64_t>(seed);
  c.n_paths = opt_count(doc, "n_paths", 1, 1);
  if (doc.contains("levels")) {
    if (!doc["levels"].is_array()) throw ConfigError("config: \"levels\" must be an array");
    for (const auto& l : doc["levels"]) {
      if (!l.is_number_integer() || l.get<int>() < 1 || l.get<int>() > 24) {
        throw ConfigError("config: levels must be integers in 1..24");
      }
      c.levels.push_back(l.get<int>());
    }
    if (c.levels.empty()) throw ConfigError("config: \"levels\" must not be empty");
    if (!std::is_sorted(c.levels.begin(), c.levels.end())) throw ConfigError("config: levels must increase");
  }
  if (!doc.contains("output_dir") || !doc["output_dir"].is_string()) {
    throw ConfigError("config: \"output_dir\" must be a string");
  }
  c.output_dir = doc["output_dir"].get<std::string>();
  c.persist_seeds = opt_count(doc, "persist_seeds", 8);
  c.document = std::move(doc);
  make_suite(c);  // resolves every name now
  return c;
}

ExperimentConfig load_config(const fs::path& file, const Overrides& overrides) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + file.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
  return parse_config(std::move(doc), overrides);
}

std::string summary_text(const VerdictRecord& verdict) {
  std::ostringstream out;
  if (!verdict.subject.empty()) out << verdict.subject << "\n";
  for (const auto& c : verdict.checks) {
    out << c.name << " " << fmt(c.value, "%.1e") << ": " << (c.pass ? "PASS" : "FAIL");
    if (!c.detail.empty()) out << "  (" << c.detail << ")";
    out << "\n";
  }
  out << "verdict: " << (verdict.pass() ? "PASS" : "FAIL") << "\n";
  return out.str();
}

RunOutcome run_experiment(const ExperimentConfig& config) {
  const auto suite = make_suite(config);
  RunOutcome outcome;
  outcome.directory = config.output_dir / config.name;
  std::error_code ec;
  fs::create_directories(outcome.directory, ec);
  if (ec || !fs::is_directory(outcome.directory)) {
    throw ConfigError("cannot create output directory " + outcome.directory.string());
  }
  const std::size_t n = suite->count();
  const std::size_t persisted = std::min(n, config.persist_seeds);
  std::vector<Json> records(n);
  std::vector<std::string> dirs(persisted);
  parallel_for(n, [&](std::size_t p) {
    const std::uint64_t seed = derive_seed(config.base_seed, p);
    if (p < persisted) {
      dirs[p] = std::to_string(seed);
      const fs::path dir = outcome.directory / dirs[p];
      std::error_code e;
      fs::create_directories(dir, e);
      if (e) throw ConfigError("cannot create " + dir.string());
      Json rec = suite->compute(p, seed, &dir);
      write_text(dir / "report.json", Json{{"schema_version", kSchemaVersion},
                                           {"experiment", to_string(config.kind)},
                                           {"record", rec}}.dump(1) + "\n");
      suite->rederive(rec);
      write_text(dir / "summary.txt", seed_summary(*suite, rec));
      records[p] = strip_detail(std::move(rec));
    } else {
      records[p] = suite->compute(p, seed, nullptr);
    }
  });
  outcome.verdict = suite->evaluate(records);
  outcome.verdict.subject = config.name + ": " + outcome.verdict.subject;

  Json aggregate = {{"schema_version", kSchemaVersion},
                    {"experiment", to_string(config.kind)},
                    {"config", config.document},
                    {"persisted", dirs},
                    {"records", records},
                    {"verdict", to_json(outcome.verdict)}};
  write_text(outcome.directory / "aggregate.json", aggregate.dump(1) + "\n");
  write_text(outcome.directory / "summary.txt", summary_text(outcome.verdict));
  return outcome;
}

RunOutcome replay_experiment(const fs::path& directory) {
  const fs::path agg_file = directory / "aggregate.json";
  if (!fs::exists(agg_file)) throw FormatError("missing " + agg_file.string());
  const Json agg = read_json(agg_file);
  try {
    if (!agg.contains("schema_version") || agg["schema_version"] != kSchemaVersion) {
      throw FormatError(agg_file.string() + ": unsupported schema_version");
    }
    ExperimentConfig config = parse_config(agg.at("config"));
    const auto suite = make_suite(config);
    std::vector<Json> records = agg.at("records").get<std::vector<Json>>();
    if (records.size() != suite->count()) throw FormatError("aggregate: record count does not match config");
    const auto persisted = agg.at("persisted").get<std::vector<std::string>>();
    for (std::size_t p = 0; p < persisted.size() && p < records.size(); ++p) {
      const fs::path file = directory / persisted[p] / "report.json";
      if (!fs::exists(file)) throw FormatError("missing " + file.string());
      const Json rep = read_json(file);
      if (!rep.contains("schema_version") || rep["schema_version"] != kSchemaVersion) {
        throw FormatError(file.string() + ": unsupported schema_version");
      }
      Json rec = rep.at("record");
      suite->rederive(rec);
      records[p] = strip_detail(std::move(rec));
    }
    RunOutcome outcome;
    outcome.directory = directory;
    outcome.verdict = suite->evaluate(records);
    outcome.verdict.subject = config.name + ": " + outcome.verdict.subject;
    return outcome;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("replay: ") + e.what());
  }
}

std::string catalog_listing() {
  std::ostringstream out;
  out << "functions:\n";
  for (const auto& e : function_catalog()) {
    out << "  " << e.name << (e.convex ? " (convex)" : "") << ": " << e.description << "\n";
  }
  out << "path models:\n"
         "  brownian {sigma, drift, start}\n"
         "  compound_poisson {rate, jump_law, start}\n"
         "  jump_diffusion {sigma, drift, rate, jump_law, start}\n"
         "  finite_variation {knots: [[t, x], ...]}\n"
         "jump laws:\n"
         "  two_point {p, first, second}\n"
         "  uniform {lo, hi}\n"
         "  normal {mean, sd}\n"
         "increasing processes:\n"
         "  poisson_counting {rate}\n"
         "  compound_poisson_increasing {rate, jump_law}\n"
         "  path_qv {model}\n"
         "  deterministic {slope}\n"
         "integrands:\n"
         "  constant {c}\n"
         "  indicator_before {tau}\n"
         "  left_limit_function {h, bound}\n"
         "functionals:\n"
         "  quadratic, hat {f}, weighted_hat {g, f}, star {f, g}; optional left_limit\n"
         "schemes:\n"
         "  dyadic, hitting_times {hitting_scale}\n"
         "experiments:\n"
         "  summability, taylor, qv, ito, tanaka, compensator, independence\n";
  return out.str();
}

}  // namespace pathcalc
