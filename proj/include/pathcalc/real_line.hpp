#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pathcalc/scalar_fn.hpp"
#include "pathcalc/two_index_fn.hpp"

namespace pathcalc {

// Finite point set inside (a, b). Sums always run over {a} + points + {b}.
class Partition {
 public:
  Partition(double a, double b, std::vector<double> points);

  static Partition uniform(double a, double b, std::size_t cells);
  static Partition dyadic(double a, double b, int level) {
    return uniform(a, b, std::size_t{1} << level);
  }

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  const std::vector<double>& points() const noexcept { return points_; }

  // True iff every point of `coarser` is also a point of *this.
  bool refines(const Partition& coarser) const;

  // One point inserted into every cell at a random position in its middle
  // half, drawn from `seed`/`level`.
  Partition refined_randomly(std::uint64_t seed, std::uint32_t level) const;

 private:
  double a_, b_;
  std::vector<double> points_;
};

// F^k_{h_1..h_k}(x); k = h.size(). Non-finite infinite results raise
// NumericRange; NaN from F is returned as is.
double incremental_ratio(const TwoIndexFn& f, double x, std::span<const double> h);

double partition_sum(const TwoIndexFn& f, const Partition& partition);
double partition_abs_sum(const TwoIndexFn& f, const Partition& partition);

struct RefinementScheme {
  enum class Kind { kDyadic, kRandom };
  Kind kind = Kind::kDyadic;
  int max_level = 20;
  std::uint64_t seed = 0;  // random chains only

  static RefinementScheme dyadic(int max_level = 20) { return {Kind::kDyadic, max_level, 0}; }
  static RefinementScheme random(std::uint64_t seed, int max_level = 20) {
    return {Kind::kRandom, max_level, seed};
  }
};

// Walks the refinement chain pi_0 (no interior points), pi_1, ... calling
// visit(level, partition) until it returns false or max_level is reached.
template <typename Visit>
void for_each_refinement(double a, double b, const RefinementScheme& scheme, Visit&& visit);

struct SummabilityResult {
  double estimate = 0.0;
  bool converged = false;
  std::vector<double> trace;  // one partition sum per level
};

// Converged iff the last three successive differences are all below tol.
SummabilityResult summability_limit(const TwoIndexFn& f, double a, double b,
                                    const RefinementScheme& scheme, double tol = 1e-4);

struct VariationResult {
  double estimate = 0.0;
  bool finite = false;
  bool converged = false;
  bool exceeded_threshold = false;
  double threshold = 0.0;
  std::vector<double> trace;
};

// Same chain with |F| summands. Infinite when the trace exceeds
// threshold_scale * (|F(a,b)| + 1) or never settles within max_level.
VariationResult variation_limit(const TwoIndexFn& f, double a, double b,
                                const RefinementScheme& scheme, double tol = 1e-4,
                                double threshold_scale = 1e6);

struct LipschitzScanOptions {
  int scales = 4;               // h_max, h_max/shrink, ...
  double shrink = 4.0;
  double growth_factor = 2.0;   // allowed growth of the sup from coarsest to finest
  std::size_t max_points = 20000;
};

struct LipschitzScan {
  double sup_estimate = 0.0;
  bool bounded = false;
  bool scan_failed = false;  // F produced NaN
  std::string failure;
  std::vector<double> scale_h;
  std::vector<double> scale_sup;
};

// sup over x in K (grid of spacing min(1/density, h/4)) and h_i <= h of
// |F^k(x, h_1..h_k)|, repeated at shrinking h.
LipschitzScan lipschitz_scan(const TwoIndexFn& f, int k, const Interval& domain, double h_max,
                             double density, const LipschitzScanOptions& options = {});

struct DerivativeEstimate {
  double value = 0.0;
  bool exists = false;
  std::vector<double> raw;           // F^j(x, h, ..., h) along the schedule
  std::vector<double> extrapolated;  // polynomial extrapolation to h = 0
};

// Halving schedule 2^-2, 2^-3, ... with a floor chosen per order so rounding
// error stays below the extrapolation tolerance.
std::vector<double> default_derivative_schedule(int order);

// D_+^j F(x) along equal increments anchored at x; exists iff three
// successive extrapolated values agree within rel_tol * max(1, |value|).
DerivativeEstimate approx_derivative(const TwoIndexFn& f, int order, double x,
                                     std::span<const double> h_schedule, double rel_tol = 1e-6);
DerivativeEstimate approx_derivative(const ScalarFn& f, int order, double x,
                                     std::span<const double> h_schedule, double rel_tol = 1e-6);
inline DerivativeEstimate approx_derivative(const ScalarFn& f, int order, double x) {
  const auto s = default_derivative_schedule(order);
  return approx_derivative(f, order, x, s);
}

struct ExpansionReport {
  double a = 0.0, b = 0.0;
  int order = 1;
  std::vector<std::pair<int, double>> terms;  // (j, (b-a)^j / j! D_+^j F(a))
  double integral = 0.0;                      // I(F; a, b)
  double remainder = 0.0;
  double identity_gap = 0.0;
  double sup_ratio = 0.0;                     // sup |F^k| from lipschitz_scan
  double remainder_bound = 0.0;               // (b-a)^k / k! * sup_ratio
  bool within_bound = false;
  bool applicable = true;
  std::string reason;
  bool success = false;
};

struct TaylorOptions {
  double summability_tol = 1e-10;
  double gap_tol = 1e-10;
  double derivative_tol = 1e-6;
  double bound_rel_tol = 1e-8;
  int max_level = 16;
  double scan_density = 2000.0;
};

ExpansionReport taylor_check(const TwoIndexFn& f, double a, double b, int order,
                             const TaylorOptions& options = {});

// --- template implementation ------------------------------------------------

template <typename Visit>
void for_each_refinement(double a, double b, const RefinementScheme& scheme, Visit&& visit) {
  Partition current(a, b, {});
  for (int level = 0; level <= scheme.max_level; ++level) {
    if (level > 0) {
      current = scheme.kind == RefinementScheme::Kind::kDyadic
                    ? Partition::dyadic(a, b, level)
                    : current.refined_randomly(scheme.seed, static_cast<std::uint32_t>(level));
    }
    if (!visit(level, current)) return;
  }
}

}  // namespace pathcalc
