#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pathcalc/path.hpp"
#include "pathcalc/two_index_fn.hpp"

namespace pathcalc {

enum class GridScheme { kDyadic, kHittingTimes };

const char* to_string(GridScheme scheme) noexcept;

// Increasing path indices 0 = n_0 < n_1 < ... < last; always contains every
// jump index of the path it was built from.
struct RiemannGrid {
  GridScheme scheme = GridScheme::kDyadic;
  double param = 0.0;  // level (dyadic) or lattice spacing eps (hitting times)
  std::vector<std::size_t> indices;
  double mesh = 0.0;   // largest time gap
  std::size_t path_size = 0;

  std::size_t cells() const noexcept { return indices.empty() ? 0 : indices.size() - 1; }
};

// Dyadic(level): indices nearest to j T / 2^level plus all jump indices.
RiemannGrid dyadic_grid(const SamplePath& path, int level);
// HittingTimes(eps): successive first exits of X from ((m-1) eps, (m+1) eps)
// on the absolute lattice eps Z, plus jump indices and the horizon. Throws
// ResolutionExhausted if eps is below the path's RMS continuous increment.
RiemannGrid hitting_grid(const SamplePath& path, double eps);
RiemannGrid riemann_grid(const SamplePath& path, GridScheme scheme, double param);

// Refinement level -> grid. For hitting times level L means
// eps = hitting_scale * 2^(-L/2), which matches the dyadic cell count for BM.
double hitting_eps(int level, double hitting_scale = 1.0);
RiemannGrid grid_at_level(const SamplePath& path, GridScheme scheme, int level,
                          double hitting_scale = 1.0);

// Grid restricted to times <= sigma, with the index of sigma appended.
RiemannGrid truncate_grid(const RiemannGrid& grid, const SamplePath& path, double sigma);

// F(s, t) = base(X_s, X_t). With the left-limit rule every jump time r in
// (s, t] splits the pair through X_{r-}: base(X_s, X_{r-}) + base(X_{r-}, X_r) + ...
// An optional stop time sigma evaluates F(s ^ sigma, t ^ sigma).
class PathFunctional {
 public:
  explicit PathFunctional(TwoIndexFn base, bool left_limit = false);

  double operator()(const SamplePath& path, std::size_t i, std::size_t j) const;
  // Term magnitude of the same evaluation (see TwoIndexFn::magnitude).
  double magnitude(const SamplePath& path, std::size_t i, std::size_t j) const;

  const TwoIndexFn& base() const noexcept { return base_; }
  bool left_limit() const noexcept { return left_limit_; }
  const std::optional<double>& stop_time() const noexcept { return stop_; }
  std::string label() const;

  PathFunctional scaled(double c) const;
  // Requires equal rule and stop time.
  friend PathFunctional operator+(const PathFunctional& a, const PathFunctional& b);

 private:
  template <typename Eval>
  double combine(const SamplePath& path, std::size_t i, std::size_t j, Eval&& eval) const;
  friend PathFunctional stopped_functional(const PathFunctional& f, double sigma);
  TwoIndexFn base_;
  bool left_limit_ = false;
  std::optional<double> stop_;
};

// F^sigma(u, v) = F(u ^ sigma, v ^ sigma); sigma >= 0.
PathFunctional stopped_functional(const PathFunctional& f, double sigma);

double pathwise_sum(const PathFunctional& f, const SamplePath& path, const RiemannGrid& grid);
// Partial sums at every grid point (first entry 0).
std::vector<double> pathwise_series(const PathFunctional& f, const SamplePath& path,
                                    const RiemannGrid& grid);

// Sum of squared grid increments, same summation as pathwise_sum.
double realized_qv(const SamplePath& path, const RiemannGrid& grid);

// T_X(F)(s, t) = F(s, t) / (X_t - X_s)^2; OutsideDomain when X_s == X_t.
double t_x(const PathFunctional& f, const SamplePath& path, std::size_t i, std::size_t j);
double t_x_at(const PathFunctional& f, const SamplePath& path, double s, double t);

// T_X is ill-conditioned when X_s is close to X_t; rounding_bound is a
// first-order bound on the floating-point error of value.
struct TxValue {
  double value = 0.0;
  double rounding_bound = 0.0;
};
TxValue t_x_bounded(const PathFunctional& f, const SamplePath& path, std::size_t i, std::size_t j);

enum class BoundType { kBounded, kLowerBounded };

struct ClassScanOptions {
  int coarse_level = 6;
  int fine_level = 12;
  std::size_t window = 8;       // pairs (n, n + 1..window) on each dyadic grid
  double growth_factor = 2.0;   // allowed growth from coarse to fine
  double max_rounding = 1e-6;   // pairs with a larger T_X rounding bound are skipped
};

struct ClassScan {
  double estimate = 0.0;  // sup |T_X F| (bounded) or inf T_X F (lower bounded)
  bool holds = false;
  std::vector<int> levels;
  std::vector<double> level_extreme;
  std::size_t pairs_scanned = 0;
  std::size_t pairs_skipped = 0;     // X_s == X_t
  std::size_t pairs_unresolved = 0;  // rounding bound above max_rounding
};

ClassScan class_scan(const PathFunctional& f, std::span<const SamplePath> paths, BoundType bound,
                     const ClassScanOptions& options = {});

struct SchemeSpec {
  GridScheme scheme = GridScheme::kDyadic;
  double hitting_scale = 1.0;
};

struct ConvergenceOptions {
  std::size_t n_steps = std::size_t{1} << 16;
  double horizon = 1.0;
  std::uint64_t base_seed = 1;
  double eps = 0.05;
  double delta = 0.05;
};

struct ConvergenceDiagnostic {
  std::vector<int> levels;
  std::vector<std::string> schemes;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<std::vector<double>>> estimates;  // [scheme][level][path]
  std::vector<std::vector<double>> tail_probs;              // [scheme][k]: P(|S_k - S_{k+1}| > eps)
  double cross_tail_prob = 1.0;  // finest level, worst scheme pair
  double eps = 0.05;
  double delta = 0.05;
  bool verdict = false;
  std::vector<std::string> notes;
};

// Pathwise sums of one path, [scheme][level]; unresolvable grids give NaN and
// the first message goes to *failure.
std::vector<std::vector<double>> riemann_estimates(const PathFunctional& f, const SamplePath& path,
                                                   std::span<const SchemeSpec> schemes,
                                                   std::span<const int> levels,
                                                   std::string* failure = nullptr);

// Recomputes tail_probs, cross_tail_prob and verdict from estimates, eps,
// delta and notes (any note fails the verdict).
void evaluate_convergence(ConvergenceDiagnostic& d);

// Monte Carlo surrogate for convergence in probability and independence of
// the Riemann sequence. Needs at least two schemes and two levels.
ConvergenceDiagnostic limit_in_probability(const PathFunctional& f, const PathModel& model,
                                           std::span<const SchemeSpec> schemes,
                                           std::span<const int> levels, std::size_t n_paths,
                                           const ConvergenceOptions& options = {});

}  // namespace pathcalc
