#include "pathcalc/riemann.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pathcalc/error.hpp"
#include "pathcalc/numeric.hpp"
#include "pathcalc/parallel.hpp"

namespace pathcalc {

const char* to_string(GridScheme scheme) noexcept {
  switch (scheme) {
    case GridScheme::kDyadic: return "dyadic";
    case GridScheme::kHittingTimes: return "hitting_times";
  }
  return "?";
}

namespace {

void finish_grid(RiemannGrid& g, const SamplePath& path) {
  g.indices.push_back(0);
  g.indices.push_back(path.last());
  for (const auto& j : path.jumps()) g.indices.push_back(j.index);
  std::sort(g.indices.begin(), g.indices.end());
  g.indices.erase(std::unique(g.indices.begin(), g.indices.end()), g.indices.end());
  g.mesh = 0.0;
  for (std::size_t k = 1; k < g.indices.size(); ++k) {
    g.mesh = std::max(g.mesh, path.time(g.indices[k]) - path.time(g.indices[k - 1]));
  }
  g.path_size = path.size();
}

void check_grid(const RiemannGrid& grid, const SamplePath& path) {
  if (grid.path_size != path.size() || grid.indices.empty() || grid.indices.back() >= path.size()) {
    throw InvalidArgument("grid does not belong to this path");
  }
}

}  // namespace

RiemannGrid dyadic_grid(const SamplePath& path, int level) {
  if (level < 0 || level > 40) throw InvalidArgument("dyadic grid: level must be in [0, 40]");
  RiemannGrid g;
  g.scheme = GridScheme::kDyadic;
  g.param = level;
  const auto times = path.times();
  const double horizon = path.horizon();
  const std::uint64_t cells = std::uint64_t{1} << level;
  if (cells >= 4 * static_cast<std::uint64_t>(path.size())) {
    // finer than the sampling: every index is its own nearest point
    for (std::size_t i = 1; i < path.size(); ++i) g.indices.push_back(i);
    finish_grid(g, path);
    return g;
  }
  std::size_t prev = 0;
  for (std::uint64_t j = 1; j < cells; ++j) {
    const double target = horizon * (static_cast<double>(j) / static_cast<double>(cells));
    auto it = std::lower_bound(times.begin() + static_cast<std::ptrdiff_t>(prev), times.end(), target);
    std::size_t k = static_cast<std::size_t>(it - times.begin());
    if (k == times.size()) k = times.size() - 1;
    if (k > 0 && target - times[k - 1] <= times[k] - target) --k;
    if (k != prev) g.indices.push_back(k);
    prev = k;
  }
  finish_grid(g, path);
  return g;
}

RiemannGrid hitting_grid(const SamplePath& path, double eps) {
  if (!std::isfinite(eps) || !(eps > 0.0)) throw InvalidArgument("hitting grid: eps must be > 0");
  const double resolution = path.continuous_rms_increment();
  if (eps < resolution) {
    throw ResolutionExhausted("hitting grid: eps below the path's RMS increment (" +
                              std::to_string(resolution) + ")");
  }
  RiemannGrid g;
  g.scheme = GridScheme::kHittingTimes;
  g.param = eps;
  const auto x = path.values();
  double m = std::round(x[0] / eps);
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (path.is_jump(i)) {
      m = std::round(x[i] / eps);
      continue;  // added by finish_grid
    }
    if (x[i] >= (m + 1.0) * eps) {
      g.indices.push_back(i);
      m = std::floor(x[i] / eps);
    } else if (x[i] <= (m - 1.0) * eps) {
      g.indices.push_back(i);
      m = std::ceil(x[i] / eps);
    }
  }
  finish_grid(g, path);
  return g;
}

RiemannGrid riemann_grid(const SamplePath& path, GridScheme scheme, double param) {
  if (scheme == GridScheme::kDyadic) {
    if (param != std::floor(param)) throw InvalidArgument("dyadic grid: level must be an integer");
    return dyadic_grid(path, static_cast<int>(param));
  }
  return hitting_grid(path, param);
}

double hitting_eps(int level, double hitting_scale) {
  return hitting_scale * std::exp2(-0.5 * level);
}

RiemannGrid grid_at_level(const SamplePath& path, GridScheme scheme, int level,
                          double hitting_scale) {
  return scheme == GridScheme::kDyadic ? dyadic_grid(path, level)
                                       : hitting_grid(path, hitting_eps(level, hitting_scale));
}

RiemannGrid truncate_grid(const RiemannGrid& grid, const SamplePath& path, double sigma) {
  check_grid(grid, path);
  if (!(sigma >= 0.0)) throw InvalidArgument("truncate_grid: sigma must be >= 0");
  const std::size_t k = path.index_at_or_before(sigma);
  RiemannGrid out = grid;
  out.indices.clear();
  for (std::size_t i : grid.indices) {
    if (i <= k) out.indices.push_back(i);
  }
  if (out.indices.back() != k) out.indices.push_back(k);
  out.mesh = 0.0;
  for (std::size_t n = 1; n < out.indices.size(); ++n) {
    out.mesh = std::max(out.mesh, path.time(out.indices[n]) - path.time(out.indices[n - 1]));
  }
  return out;
}

// --- PathFunctional --------------------------------------------------------

PathFunctional::PathFunctional(TwoIndexFn base, bool left_limit)
    : base_(std::move(base)), left_limit_(left_limit) {}

template <typename Eval>
double PathFunctional::combine(const SamplePath& path, std::size_t i, std::size_t j,
                               Eval&& eval) const {
  if (stop_) {
    const std::size_t k = path.index_at_or_before(*stop_);
    i = std::min(i, k);
    j = std::min(j, k);
  }
  if (i == j) return 0.0;
  if (!left_limit_ || i > j) return eval(path.value(i), path.value(j));
  double total = 0.0;
  double from = path.value(i);
  const auto jumps = path.jumps_between(i, j);
  for (const Jump& jump : jumps) {
    const double before = path.pre_value(jump.index);
    total += eval(from, before);
    total += eval(before, path.value(jump.index));
    from = path.value(jump.index);
  }
  if (jumps.empty() || jumps.back().index != j) total += eval(from, path.value(j));
  return total;
}

double PathFunctional::operator()(const SamplePath& path, std::size_t i, std::size_t j) const {
  return combine(path, i, j, [this](double x, double y) { return base_(x, y); });
}

double PathFunctional::magnitude(const SamplePath& path, std::size_t i, std::size_t j) const {
  return combine(path, i, j, [this](double x, double y) { return base_.magnitude(x, y); });
}

std::string PathFunctional::label() const {
  std::string s = base_.label();
  if (left_limit_) s += "[left-limit]";
  if (stop_) s += "[stopped]";
  return s;
}

PathFunctional PathFunctional::scaled(double c) const {
  PathFunctional out = *this;
  out.base_ = base_.scaled(c);
  return out;
}

PathFunctional operator+(const PathFunctional& a, const PathFunctional& b) {
  if (a.left_limit_ != b.left_limit_ || a.stop_ != b.stop_) {
    throw InvalidArgument("PathFunctional sum: composition rules differ");
  }
  PathFunctional out = a;
  out.base_ = a.base_ + b.base_;
  return out;
}

PathFunctional stopped_functional(const PathFunctional& f, double sigma) {
  if (!std::isfinite(sigma) || sigma < 0.0) throw InvalidArgument("stop time must be >= 0");
  PathFunctional out = f;
  out.stop_ = f.stop_ ? std::min(*f.stop_, sigma) : sigma;
  return out;
}

// --- sums ------------------------------------------------------------------

double pathwise_sum(const PathFunctional& f, const SamplePath& path, const RiemannGrid& grid) {
  check_grid(grid, path);
  CompensatedSum s;
  for (std::size_t n = 1; n < grid.indices.size(); ++n) {
    s += f(path, grid.indices[n - 1], grid.indices[n]);
  }
  return s.value();
}

std::vector<double> pathwise_series(const PathFunctional& f, const SamplePath& path,
                                    const RiemannGrid& grid) {
  check_grid(grid, path);
  std::vector<double> out{0.0};
  out.reserve(grid.indices.size());
  CompensatedSum s;
  for (std::size_t n = 1; n < grid.indices.size(); ++n) {
    s += f(path, grid.indices[n - 1], grid.indices[n]);
    out.push_back(s.value());
  }
  return out;
}

double realized_qv(const SamplePath& path, const RiemannGrid& grid) {
  check_grid(grid, path);
  CompensatedSum s;
  for (std::size_t n = 1; n < grid.indices.size(); ++n) {
    const double d = path.value(grid.indices[n]) - path.value(grid.indices[n - 1]);
    s += d * d;
  }
  return s.value();
}

double t_x(const PathFunctional& f, const SamplePath& path, std::size_t i, std::size_t j) {
  if (i >= path.size() || j >= path.size()) throw InvalidArgument("t_x: index out of range");
  const double d = path.value(j) - path.value(i);
  if (d == 0.0) throw OutsideDomain("t_x: X_s == X_t");
  return f(path, i, j) / (d * d);
}

double t_x_at(const PathFunctional& f, const SamplePath& path, double s, double t) {
  return t_x(f, path, path.index_at_or_before(s), path.index_at_or_before(t));
}

TxValue t_x_bounded(const PathFunctional& f, const SamplePath& path, std::size_t i,
                    std::size_t j) {
  TxValue out;
  out.value = t_x(f, path, i, j);
  constexpr double u = std::numeric_limits<double>::epsilon();
  const double xi = path.value(i), xj = path.value(j);
  const double d = xj - xi;
  const double numerator = 4.0 * u * (f.magnitude(path, i, j) + std::abs(f(path, i, j)));
  out.rounding_bound =
      numerator / (d * d) + std::abs(out.value) * 4.0 * u * (std::abs(xi) + std::abs(xj)) / std::abs(d);
  return out;
}

// --- class scan ------------------------------------------------------------

ClassScan class_scan(const PathFunctional& f, std::span<const SamplePath> paths, BoundType bound,
                     const ClassScanOptions& options) {
  if (paths.empty()) throw InvalidArgument("class_scan: empty path sample");
  if (options.coarse_level > options.fine_level || options.window < 1) {
    throw InvalidArgument("class_scan: bad options");
  }
  ClassScan out;
  const bool upper = bound == BoundType::kBounded;
  out.estimate = upper ? 0.0 : std::numeric_limits<double>::infinity();
  for (int level = options.coarse_level; level <= options.fine_level; ++level) {
    double extreme = upper ? 0.0 : std::numeric_limits<double>::infinity();
    for (const SamplePath& path : paths) {
      const RiemannGrid grid = dyadic_grid(path, level);
      const auto& idx = grid.indices;
      for (std::size_t a = 0; a + 1 < idx.size(); ++a) {
        for (std::size_t b = a + 1; b <= std::min(a + options.window, idx.size() - 1); ++b) {
          const double d = path.value(idx[b]) - path.value(idx[a]);
          if (d == 0.0) {
            ++out.pairs_skipped;
            continue;
          }
          const TxValue tx = t_x_bounded(f, path, idx[a], idx[b]);
          if (tx.rounding_bound > options.max_rounding) {
            ++out.pairs_unresolved;
            continue;
          }
          const double v = tx.value;
          ++out.pairs_scanned;
          if (std::isnan(v)) {
            extreme = std::numeric_limits<double>::quiet_NaN();
            continue;
          }
          extreme = upper ? std::max(extreme, std::abs(v)) : std::min(extreme, v);
        }
      }
    }
    out.levels.push_back(level);
    out.level_extreme.push_back(extreme);
  }
  const double first = out.level_extreme.front();
  const double last = out.level_extreme.back();
  bool finite_all = true;
  for (double v : out.level_extreme) {
    finite_all = finite_all && std::isfinite(v);
    out.estimate = upper ? std::max(out.estimate, v) : std::min(out.estimate, v);
  }
  if (upper) {
    out.holds = finite_all && last <= options.growth_factor * first + 1e-12;
  } else {
    // below zero the infimum may not run away faster than the allowed growth
    out.holds = finite_all && last >= options.growth_factor * std::min(first, 0.0) - 1e-12;
  }
  return out;
}

// --- convergence in probability --------------------------------------------

std::vector<std::vector<double>> riemann_estimates(const PathFunctional& f, const SamplePath& path,
                                                   std::span<const SchemeSpec> schemes,
                                                   std::span<const int> levels,
                                                   std::string* failure) {
  std::vector<std::vector<double>> out(schemes.size(), std::vector<double>(levels.size()));
  for (std::size_t s = 0; s < schemes.size(); ++s) {
    for (std::size_t l = 0; l < levels.size(); ++l) {
      try {
        const RiemannGrid grid =
            grid_at_level(path, schemes[s].scheme, levels[l], schemes[s].hitting_scale);
        out[s][l] = pathwise_sum(f, path, grid);
      } catch (const ResolutionExhausted& e) {
        out[s][l] = std::numeric_limits<double>::quiet_NaN();
        if (failure && failure->empty()) *failure = e.what();
      }
    }
  }
  return out;
}

void evaluate_convergence(ConvergenceDiagnostic& d) {
  const std::size_t ns = d.estimates.size();
  if (ns < 2) throw InvalidArgument("evaluate_convergence: need at least two schemes");
  const std::size_t nl = d.estimates[0].size();
  if (nl < 2) throw InvalidArgument("evaluate_convergence: need at least two levels");
  const std::size_t n_paths = d.estimates[0][0].size();
  for (const auto& per_scheme : d.estimates) {
    if (per_scheme.size() != nl) throw InvalidArgument("evaluate_convergence: ragged estimates");
    for (const auto& per_level : per_scheme) {
      if (per_level.size() != n_paths || n_paths == 0) {
        throw InvalidArgument("evaluate_convergence: ragged estimates");
      }
    }
  }
  // NaN (unresolvable) comparisons count as exceedances.
  auto exceed = [&](double a, double b) { return !(std::abs(a - b) <= d.eps); };
  const double n = static_cast<double>(n_paths);
  d.tail_probs.assign(ns, {});
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t l = 0; l + 1 < nl; ++l) {
      std::size_t count = 0;
      for (std::size_t p = 0; p < n_paths; ++p) {
        count += exceed(d.estimates[s][l][p], d.estimates[s][l + 1][p]);
      }
      d.tail_probs[s].push_back(static_cast<double>(count) / n);
    }
  }
  d.cross_tail_prob = 0.0;
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t t = s + 1; t < ns; ++t) {
      std::size_t count = 0;
      for (std::size_t p = 0; p < n_paths; ++p) {
        count += exceed(d.estimates[s][nl - 1][p], d.estimates[t][nl - 1][p]);
      }
      d.cross_tail_prob = std::max(d.cross_tail_prob, static_cast<double>(count) / n);
    }
  }
  d.verdict = d.cross_tail_prob <= d.delta;
  for (const auto& tp : d.tail_probs) d.verdict = d.verdict && tp.back() <= d.delta;
  if (!d.notes.empty()) d.verdict = false;
}

ConvergenceDiagnostic limit_in_probability(const PathFunctional& f, const PathModel& model,
                                           std::span<const SchemeSpec> schemes,
                                           std::span<const int> levels, std::size_t n_paths,
                                           const ConvergenceOptions& options) {
  if (schemes.size() < 2) throw InvalidArgument("limit_in_probability: need at least two schemes");
  if (levels.size() < 2) throw InvalidArgument("limit_in_probability: need at least two levels");
  if (n_paths < 1) throw InvalidArgument("limit_in_probability: n_paths must be >= 1");
  if (!(options.eps > 0.0) || !(options.delta >= 0.0 && options.delta <= 1.0)) {
    throw InvalidArgument("limit_in_probability: bad eps or delta");
  }
  ConvergenceDiagnostic d;
  d.levels.assign(levels.begin(), levels.end());
  d.eps = options.eps;
  d.delta = options.delta;
  const std::size_t ns = schemes.size(), nl = levels.size();
  for (const auto& s : schemes) d.schemes.push_back(to_string(s.scheme));
  d.estimates.assign(ns, std::vector<std::vector<double>>(nl, std::vector<double>(n_paths, 0.0)));
  d.seeds.resize(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) d.seeds[p] = derive_seed(options.base_seed, p);

  std::vector<std::string> failures(n_paths);
  parallel_for(n_paths, [&](std::size_t p) {
    const SamplePath path = simulate(model, options.n_steps, options.horizon, d.seeds[p]);
    const auto est = riemann_estimates(f, path, schemes, levels, &failures[p]);
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t l = 0; l < nl; ++l) d.estimates[s][l][p] = est[s][l];
    }
  });
  for (std::size_t p = 0; p < n_paths; ++p) {
    if (!failures[p].empty()) {
      d.notes.push_back("seed " + std::to_string(d.seeds[p]) + ": " + failures[p]);
    }
  }

  evaluate_convergence(d);
  return d;
}

}  // namespace pathcalc
