#include "pathcalc/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "pathcalc/error.hpp"
#include "pathcalc/numeric.hpp"
#include "pathcalc/real_line.hpp"

namespace pathcalc {

BracketModel BracketModel::from_model(const PathModel& model) {
  BracketModel b;
  const double s = model.diffusion_sigma();
  b.continuous_rate = s * s;
  if (model.has_jumps()) b.jump_rate = model.rate * model.jump_law->second_moment();
  return b;
}

const char* to_string(DecompositionMode mode) noexcept {
  return mode == DecompositionMode::kIto ? "ito" : "tanaka";
}

double DecompositionReport::max_abs_residual() const noexcept {
  double m = 0.0;
  for (double r : residual) m = std::max(m, std::abs(r));
  return m;
}

double DecompositionReport::max_abs_gap() const noexcept {
  double m = 0.0;
  for (double r : identity_gap) m = std::max(m, std::abs(r));
  return m;
}

double DecompositionReport::min_residual_increment() const noexcept {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < residual.size(); ++k) m = std::min(m, residual[k] - residual[k - 1]);
  return residual.size() > 1 ? m : 0.0;
}

double DecompositionReport::max_residual_increment() const noexcept {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < residual.size(); ++k) m = std::max(m, residual[k] - residual[k - 1]);
  return residual.size() > 1 ? m : 0.0;
}

namespace {

// Declared derivative if present, otherwise the approximate derivative
// (NaN where it does not exist).
RealFn derivative_provider(const ScalarFn& f, int order, std::string& label) {
  if (const RealFn* d = f.derivative(order)) {
    label = f.label() + (order == 1 ? "'" : "''");
    return *d;
  }
  label = "approx D" + std::to_string(order) + " " + f.label();
  const auto schedule = default_derivative_schedule(order);
  return [f, order, schedule](double x) {
    const auto est = approx_derivative(f, order, x, schedule);
    return est.exists ? est.value : std::numeric_limits<double>::quiet_NaN();
  };
}

void check_grid(const SamplePath& path, const RiemannGrid& grid) {
  if (grid.path_size != path.size() || grid.indices.size() < 2 || grid.indices.front() != 0 ||
      grid.indices.back() >= path.size()) {
    throw InvalidArgument("grid does not belong to this path");
  }
  for (const auto& j : path.jumps_between(0, grid.indices.back())) {
    if (!std::binary_search(grid.indices.begin(), grid.indices.end(), j.index)) {
      throw InvalidArgument("grid misses the jump at index " + std::to_string(j.index));
    }
  }
}

std::string where(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

DecompositionReport decompose(const SamplePath& path, const ScalarFn& f, const RiemannGrid& grid,
                              const BracketModel& bracket, const DecompositionOptions& options,
                              DecompositionMode mode) {
  check_grid(path, grid);
  DecompositionReport r;
  r.mode = mode;
  r.path_seed = path.seed();
  r.f_label = f.label();
  r.scheme = grid.scheme;
  r.grid_param = grid.param;

  std::string g_label, f2_label;
  const RealFn g = options.g ? options.g->eval() : derivative_provider(f, 1, g_label);
  const RealFn f2 = options.f2 ? options.f2->eval() : derivative_provider(f, 2, f2_label);
  if (options.g) g_label = options.g->label();
  r.g_label = g_label;

  const std::size_t cells = grid.indices.size() - 1;
  for (auto* v : {&r.times, &r.lhs, &r.stochastic_integral, &r.compensator_term,
                  &r.compensator_closed_form, &r.jump_term, &r.residual, &r.identity_gap}) {
    v->reserve(cells + 1);
  }

  const double f0 = f(path.value(0));
  CompensatedSum si, comp, comp_cf, jumps, res;
  double defect_var = 0.0;
  auto push = [&](double t, double x) {
    const double lhs = f(x) - f0;
    r.times.push_back(t);
    r.lhs.push_back(lhs);
    r.stochastic_integral.push_back(si.value());
    r.compensator_term.push_back(comp.value());
    r.compensator_closed_form.push_back(comp_cf.value());
    r.jump_term.push_back(jumps.value());
    r.residual.push_back(res.value());
    r.identity_gap.push_back(lhs - (si.value() + comp.value() + jumps.value() + res.value()));
  };
  auto not_applicable = [&](const std::string& why) {
    DecompositionReport out;
    out.mode = mode;
    out.path_seed = r.path_seed;
    out.f_label = r.f_label;
    out.g_label = r.g_label;
    out.scheme = r.scheme;
    out.grid_param = r.grid_param;
    out.applicable = false;
    out.reason = why;
    return out;
  };

  push(path.time(0), path.value(0));
  for (std::size_t n = 1; n <= cells; ++n) {
    const std::size_t i = grid.indices[n - 1], j = grid.indices[n];
    const double a = path.value(i);
    const double bp = path.pre_value(j);
    const double d = bp - a;
    const double ga = g(a);
    if (!std::isfinite(ga)) return not_applicable("no first derivative at x = " + where(a));
    const double f2a = f2(a);
    if (!std::isfinite(f2a)) return not_applicable("no second derivative at x = " + where(a));

    const double c = bracket.continuous(path.time(j)) - bracket.continuous(path.time(i));
    comp += 0.5 * f2a * (d * d);
    comp_cf += 0.5 * f2a * c;
    defect_var += 0.5 * f2a * f2a * c * c;
    si += ga * d;
    res += (f(bp) - f(a) - ga * d) - 0.5 * f2a * (d * d);

    if (path.is_jump(j)) {
      const double size = path.jump_sizes()[j];
      const double gb = g(bp);
      if (!std::isfinite(gb)) return not_applicable("no first derivative at x = " + where(bp));
      const double before = res.value();
      const double term = f(path.value(j)) - f(bp) - gb * size;
      si += gb * size;
      jumps += term;
      // everything of the jump not carried by the integral and the jump term
      res += (f(path.value(j)) - f(bp)) - gb * size - term;
      r.jumps.push_back({j, path.time(j), size, term, res.value() - before});
    }
    push(path.time(j), path.value(j));
  }
  r.bracket_defect_sd = std::sqrt(defect_var);
  return r;
}

}  // namespace

std::vector<double> stochastic_integral(const SamplePath& path, const ScalarFn& g,
                                        const RiemannGrid& grid) {
  check_grid(path, grid);
  std::vector<double> out{0.0};
  out.reserve(grid.indices.size());
  CompensatedSum si;
  for (std::size_t n = 1; n < grid.indices.size(); ++n) {
    const std::size_t i = grid.indices[n - 1], j = grid.indices[n];
    si += g(path.value(i)) * (path.pre_value(j) - path.value(i));
    if (path.is_jump(j)) si += g(path.pre_value(j)) * path.jump_sizes()[j];
    out.push_back(si.value());
  }
  return out;
}

DecompositionReport ito_decompose(const SamplePath& path, const ScalarFn& f,
                                  const RiemannGrid& grid, const BracketModel& bracket,
                                  const DecompositionOptions& options) {
  return decompose(path, f, grid, bracket, options, DecompositionMode::kIto);
}

DecompositionReport tanaka_decompose(const SamplePath& path, const ScalarFn& f,
                                     const RiemannGrid& grid, const BracketModel& bracket,
                                     const DecompositionOptions& options) {
  return decompose(path, f, grid, bracket, options, DecompositionMode::kTanaka);
}

double local_time_oracle(const SamplePath& path, double level, double eps,
                         std::optional<double> until) {
  if (!std::isfinite(eps) || !(eps > 0.0) || !std::isfinite(level)) {
    throw InvalidArgument("local_time_oracle: need finite level and eps > 0");
  }
  const double resolution = path.continuous_rms_increment();
  if (eps < resolution) {
    throw ResolutionExhausted("local_time_oracle: eps below the path's RMS increment");
  }
  const double t_end = until ? std::min(*until, path.horizon()) : path.horizon();
  const double lo = level - eps, hi = level + eps;
  CompensatedSum occupation;
  for (std::size_t k = 1; k < path.size(); ++k) {
    const double t0 = path.time(k - 1);
    if (t0 >= t_end) break;
    double t1 = path.time(k);
    double u = path.value(k - 1);
    double v = path.pre_value(k);
    if (t1 > t_end) {  // partial last cell
      v = u + (v - u) * ((t_end - t0) / (t1 - t0));
      t1 = t_end;
    }
    const double dt = t1 - t0;
    if (u == v) {
      if (u > lo && u < hi) occupation += dt;
      continue;
    }
    const double a = std::min(u, v), b = std::max(u, v);
    const double overlap = std::max(0.0, std::min(b, hi) - std::max(a, lo));
    occupation += dt * overlap / (b - a);
  }
  return occupation.value() / (2.0 * eps);
}

ReportStats summarize(const DecompositionReport& report) {
  ReportStats s;
  s.applicable = report.applicable;
  s.reason = report.reason;
  if (!report.applicable) return s;
  s.path_jumps = report.jumps.size();
  s.max_abs_gap = report.max_abs_gap();
  s.max_abs_residual = report.max_abs_residual();
  s.residual_start = report.residual.empty() ? 0.0 : report.residual.front();
  s.min_increment = report.min_residual_increment();
  for (const auto& j : report.jumps) s.max_jump = std::max(s.max_jump, std::abs(j.residual_jump));
  s.bracket_defect = report.bracket_defect();
  s.bracket_defect_sd = report.bracket_defect_sd;
  return s;
}

VerdictRecord verify_stats(std::span<const ReportStats> levels, DecompositionMode mode,
                           const VerifyOptions& options) {
  VerdictRecord v;
  if (levels.empty()) {
    v.add("reports present", 0, 1, false);
    return v;
  }
  for (const auto& r : levels) {
    if (!r.applicable) {
      v.add("applicable", 0, 1, false, r.reason);
      return v;
    }
  }
  const ReportStats& fine = levels.back();
  double gap = 0.0;
  // NaN anywhere must fail, hence the negated comparisons
  bool gap_ok = true;
  for (const auto& r : levels) {
    gap = std::max(gap, r.max_abs_gap);
    gap_ok = gap_ok && r.max_abs_gap <= options.gap_tol;
  }
  v.add("max |identity_gap|", gap, options.gap_tol, gap_ok);

  if (mode == DecompositionMode::kIto) {
    const double m = fine.max_abs_residual;
    v.add("max |residual|", m, options.tol, m <= options.tol);
  } else {
    const double start = std::abs(fine.residual_start);
    v.add("|A_0|", start, 0.0, start == 0.0);
    const double inc = fine.min_increment;
    v.add("min A increment", inc, -options.increment_tol, inc >= -options.increment_tol);
    v.add("max A jump", fine.max_jump, options.jump_tol, fine.max_jump <= options.jump_tol,
          std::to_string(fine.path_jumps) + " path jumps");
  }

  if (levels.size() < 2) {
    v.add("bracket defect under refinement", 0, 0, true, "single level: not evaluated");
  } else {
    const double coarse = std::abs(levels.front().bracket_defect);
    const double finest = std::abs(fine.bracket_defect);
    const double sd = std::hypot(levels.front().bracket_defect_sd, fine.bracket_defect_sd);
    const double limit = coarse + options.defect_slack_sd * sd + options.gap_tol;
    v.add("bracket defect under refinement", finest, limit, finest <= limit,
          "coarsest " + std::to_string(coarse));
  }
  return v;
}

VerdictRecord verify_report(std::span<const DecompositionReport> reports, DecompositionMode mode,
                            const VerifyOptions& options) {
  std::vector<ReportStats> stats;
  for (const auto& r : reports) stats.push_back(summarize(r));
  VerdictRecord v = verify_stats(stats, mode, options);
  if (reports.empty()) {
    v.subject = "empty report set";
  } else {
    const auto& fine = reports.back();
    v.subject = std::string(to_string(mode)) + " " + fine.f_label + " seed " +
                std::to_string(fine.path_seed);
  }
  return v;
}

VerdictRecord verify_report(const DecompositionReport& report, DecompositionMode mode,
                            const VerifyOptions& options) {
  return verify_report(std::span<const DecompositionReport>(&report, 1), mode, options);
}

}  // namespace pathcalc
