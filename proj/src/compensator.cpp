#include "pathcalc/compensator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pathcalc/error.hpp"
#include "pathcalc/numeric.hpp"
#include "pathcalc/parallel.hpp"
#include "pathcalc/philox.hpp"

namespace pathcalc {

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

const char* to_string(IncreasingProcessModel::Kind kind) noexcept {
  switch (kind) {
    case IncreasingProcessModel::Kind::kPoissonCounting: return "poisson_counting";
    case IncreasingProcessModel::Kind::kCompoundPoissonIncreasing: return "compound_poisson_increasing";
    case IncreasingProcessModel::Kind::kPathQV: return "path_qv";
    case IncreasingProcessModel::Kind::kDeterministic: return "deterministic";
  }
  return "unknown";
}

IncreasingProcessModel IncreasingProcessModel::poisson_counting(double rate) {
  IncreasingProcessModel m;
  m.kind = Kind::kPoissonCounting;
  m.rate = rate;
  m.validate();
  return m;
}

IncreasingProcessModel IncreasingProcessModel::compound_poisson_increasing(double rate, JumpLaw law) {
  IncreasingProcessModel m;
  m.kind = Kind::kCompoundPoissonIncreasing;
  m.rate = rate;
  m.law = std::move(law);
  m.validate();
  return m;
}

IncreasingProcessModel IncreasingProcessModel::path_qv(PathModel model) {
  IncreasingProcessModel m;
  m.kind = Kind::kPathQV;
  m.path = std::move(model);
  m.validate();
  return m;
}

IncreasingProcessModel IncreasingProcessModel::deterministic(double slope) {
  IncreasingProcessModel m;
  m.kind = Kind::kDeterministic;
  m.rate = slope;
  m.validate();
  return m;
}

void IncreasingProcessModel::validate() const {
  switch (kind) {
    case Kind::kPoissonCounting:
      if (!positive_finite(rate)) throw InvalidArgument("poisson counting: need rate > 0");
      return;
    case Kind::kCompoundPoissonIncreasing:
      if (!positive_finite(rate)) throw InvalidArgument("compound poisson: need rate > 0");
      if (!law) throw InvalidArgument("compound poisson: jump law missing");
      if (!law->nonnegative()) throw InvalidArgument("compound poisson: jump law must be supported on [0, inf)");
      return;
    case Kind::kPathQV:
      if (!path) throw InvalidArgument("path QV: path model missing");
      path->validate();
      if (path->kind == PathModel::Kind::kFiniteVariation) {
        throw UnsupportedModel("path QV: no closed-form bracket for " + path->describe());
      }
      return;
    case Kind::kDeterministic:
      if (!std::isfinite(rate) || rate < 0.0) throw InvalidArgument("deterministic: need slope >= 0");
      return;
  }
  throw UnsupportedModel("unknown increasing process kind");
}

std::string IncreasingProcessModel::describe() const {
  switch (kind) {
    case Kind::kPoissonCounting: return "poisson_counting(" + fmt(rate) + ")";
    case Kind::kCompoundPoissonIncreasing:
      return "compound_poisson_increasing(" + fmt(rate) + ", " + (law ? law->describe() : "?") + ")";
    case Kind::kPathQV: return "path_qv(" + (path ? path->describe() : "?") + ")";
    case Kind::kDeterministic: return "deterministic(" + fmt(rate) + ")";
  }
  return "unknown";
}

PathModel IncreasingProcessModel::underlying() const {
  validate();
  switch (kind) {
    case Kind::kPoissonCounting: return PathModel::compound_poisson(rate, JumpLaw::two_point(1.0, 1.0, 1.0));
    case Kind::kCompoundPoissonIncreasing: return PathModel::compound_poisson(rate, *law);
    case Kind::kPathQV: return *path;
    case Kind::kDeterministic: return PathModel::brownian(0.0, rate);
  }
  throw UnsupportedModel("unknown increasing process kind");
}

double compensator_rate(const IncreasingProcessModel& model) {
  model.validate();
  switch (model.kind) {
    case IncreasingProcessModel::Kind::kPoissonCounting: return model.rate;
    case IncreasingProcessModel::Kind::kCompoundPoissonIncreasing: return model.rate * model.law->mean();
    case IncreasingProcessModel::Kind::kPathQV: {
      const PathModel& p = *model.path;
      const double s = p.diffusion_sigma();
      double r = s * s;
      if (p.has_jumps()) r += p.rate * p.jump_law->second_moment();
      return r;
    }
    case IncreasingProcessModel::Kind::kDeterministic: return model.rate;
  }
  throw UnsupportedModel("unknown increasing process kind");
}

std::function<double(double)> compensator_closed_form(const IncreasingProcessModel& model) {
  const double r = compensator_rate(model);
  return [r](double t) { return r * std::max(t, 0.0); };
}

std::vector<double> increasing_process(const IncreasingProcessModel& model, const SamplePath& path) {
  model.validate();
  std::vector<double> a(path.size(), 0.0);
  if (model.kind != IncreasingProcessModel::Kind::kPathQV) {
    for (std::size_t k = 0; k < path.size(); ++k) a[k] = path.value(k) - path.value(0);
    return a;
  }
  CompensatedSum qv;
  for (std::size_t k = 1; k < path.size(); ++k) {
    const double d = path.pre_value(k) - path.value(k - 1);
    qv += d * d;
    const double j = path.jump_sizes()[k];
    qv += j * j;
    a[k] = qv.value();
  }
  return a;
}

PredictableSpec PredictableSpec::constant(double c) {
  if (!std::isfinite(c)) throw InvalidArgument("constant integrand must be finite");
  PredictableSpec y;
  y.kind = Kind::kConstant;
  y.c = c;
  return y;
}

PredictableSpec PredictableSpec::indicator_before(double tau) {
  if (!std::isfinite(tau)) throw InvalidArgument("indicator integrand: tau must be finite");
  PredictableSpec y;
  y.kind = Kind::kIndicatorBefore;
  y.tau = tau;
  return y;
}

PredictableSpec PredictableSpec::left_limit_function(ScalarFn h, double bound) {
  if (!positive_finite(bound)) throw InvalidArgument("h(X_-) integrand: need a finite bound > 0");
  PredictableSpec y;
  y.kind = Kind::kLeftLimitFunction;
  y.h = std::move(h);
  y.bound = bound;
  return y;
}

std::string PredictableSpec::describe() const {
  switch (kind) {
    case Kind::kConstant: return "Y = " + fmt(c);
    case Kind::kIndicatorBefore: return "Y = 1{t <= " + fmt(tau) + "}";
    case Kind::kLeftLimitFunction: return "Y = " + (h ? h->label() : std::string("?")) + "(X_-)";
  }
  return "?";
}

namespace {

double bounded_h(const PredictableSpec& y, double x) {
  const double v = (*y.h)(x);
  if (!(std::abs(v) <= y.bound)) {
    throw InvalidArgument("integrand " + y.describe() + " exceeds its bound " + fmt(y.bound) +
                          " at x = " + fmt(x));
  }
  return v;
}

}  // namespace

// Both sides use the same weights on each cell (t_{k-1}, t_k]: deterministic
// integrands are integrated exactly (overlap fraction), h(X_-) is taken at the
// left point. Jumps of A are weighted with Y at the jump time.
CompensatorSample compensator_sample(const IncreasingProcessModel& model, const PredictableSpec& y,
                                     const SamplePath& path, double rate) {
  const auto a = increasing_process(model, path);
  CompensatedSum y_da, y_dap;
  for (std::size_t k = 1; k < path.size(); ++k) {
    const double t0 = path.time(k - 1), t1 = path.time(k);
    const double jump_a = model.kind == IncreasingProcessModel::Kind::kPathQV
                              ? path.jump_sizes()[k] * path.jump_sizes()[k]
                              : path.jump_sizes()[k];
    const double cont_a = (a[k] - a[k - 1]) - jump_a;
    double w = 0.0, w_jump = 0.0;
    switch (y.kind) {
      case PredictableSpec::Kind::kConstant:
        w = w_jump = y.c;
        break;
      case PredictableSpec::Kind::kIndicatorBefore:
        w = std::clamp((y.tau - t0) / (t1 - t0), 0.0, 1.0);
        w_jump = t1 <= y.tau ? 1.0 : 0.0;
        break;
      case PredictableSpec::Kind::kLeftLimitFunction:
        w = bounded_h(y, path.value(k - 1));
        w_jump = path.is_jump(k) ? bounded_h(y, path.pre_value(k)) : 0.0;
        break;
    }
    if (cont_a != 0.0) y_da += w * cont_a;
    if (jump_a != 0.0) y_da += w_jump * jump_a;
    y_dap += w * rate * (t1 - t0);
  }
  return {y_da.value(), y_dap.value()};
}

CompensatorVerdict verify_compensator(const IncreasingProcessModel& model, const PredictableSpec& y,
                                      std::size_t n_paths, const CompensatorOptions& options) {
  if (n_paths < 2) throw InvalidArgument("verify_compensator: need at least two paths");
  const PathModel x = model.underlying();
  const double rate = options.override_rate ? *options.override_rate : compensator_rate(model);
  std::vector<double> da(n_paths), dap(n_paths), diff(n_paths);
  parallel_for(n_paths, [&](std::size_t p) {
    const auto path = simulate(x, options.n_steps, options.horizon, derive_seed(options.base_seed, p));
    const auto s = compensator_sample(model, y, path, rate);
    da[p] = s.y_da;
    dap[p] = s.y_dap;
    diff[p] = s.y_da - s.y_dap;
  });
  const auto sa = sample_stats(da), sp = sample_stats(dap), sd = sample_stats(diff);

  CompensatorVerdict v;
  v.model = model.describe();
  v.integrand = y.describe();
  v.n_paths = n_paths;
  v.horizon = options.horizon;
  v.rate_used = rate;
  v.mean_y_da = sa.mean;
  v.se_y_da = sa.std_error();
  v.mean_y_dap = sp.mean;
  v.se_y_dap = sp.std_error();
  v.difference = sa.mean - sp.mean;
  v.combined_se = std::hypot(v.se_y_da, v.se_y_dap);
  v.paired_se = sd.std_error();
  v.verdict.subject = v.model + ", " + v.integrand;
  const double limit = options.slack_se * v.combined_se;
  v.verdict.add("|E int Y dA - E int Y dA^p|", std::abs(v.difference), limit,
                std::abs(v.difference) <= limit, fmt(options.slack_se) + " combined SE");
  return v;
}

MartingaleVerdict martingale_check(const IncreasingProcessModel& model, std::size_t n_paths,
                                   std::span<const double> checkpoints,
                                   const CompensatorOptions& options) {
  if (n_paths < 2) throw InvalidArgument("martingale_check: need at least two paths");
  if (checkpoints.size() < 2) throw InvalidArgument("martingale_check: need two checkpoints");
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    if (!(checkpoints[k] >= 0.0 && checkpoints[k] <= options.horizon) ||
        (k > 0 && !(checkpoints[k] > checkpoints[k - 1]))) {
      throw InvalidArgument("martingale_check: checkpoints must increase within [0, horizon]");
    }
  }
  const PathModel x = model.underlying();
  const double rate = options.override_rate ? *options.override_rate : compensator_rate(model);
  const std::size_t m = checkpoints.size();
  std::vector<std::vector<double>> incr(m - 1, std::vector<double>(n_paths));
  parallel_for(n_paths, [&](std::size_t p) {
    const auto path = simulate(x, options.n_steps, options.horizon, derive_seed(options.base_seed, p));
    const auto a = increasing_process(model, path);
    auto martingale = [&](double t) { return a[path.index_at_or_before(t)] - rate * t; };
    double prev = martingale(checkpoints[0]);
    for (std::size_t k = 1; k < m; ++k) {
      const double cur = martingale(checkpoints[k]);
      incr[k - 1][p] = cur - prev;
      prev = cur;
    }
  });

  MartingaleVerdict v;
  v.model = model.describe();
  v.n_paths = n_paths;
  v.rate_used = rate;
  v.verdict.subject = "martingale increments of A - A^p, " + v.model;
  for (std::size_t k = 1; k < m; ++k) {
    const auto s = sample_stats(incr[k - 1]);
    IncrementCheck c{checkpoints[k - 1], checkpoints[k], s.mean, s.std_error(), false};
    c.pass = std::abs(c.mean) <= options.slack_se * c.se;
    v.increments.push_back(c);
    v.verdict.add("mean increment on (" + fmt(c.s) + ", " + fmt(c.t) + "]", std::abs(c.mean),
                  options.slack_se * c.se, c.pass);
  }
  return v;
}

}  // namespace pathcalc
