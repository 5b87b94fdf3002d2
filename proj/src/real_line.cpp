#include "pathcalc/real_line.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pathcalc/error.hpp"
#include "pathcalc/numeric.hpp"
#include "pathcalc/philox.hpp"

namespace pathcalc {

// --- Partition ----------------------------------------------------------------

Partition::Partition(double a, double b, std::vector<double> points)
    : a_(a), b_(b), points_(std::move(points)) {
  if (!std::isfinite(a) || !std::isfinite(b)) throw InvalidArgument("partition endpoints must be finite");
  if (!(a < b)) throw InvalidArgument("partition needs a < b");
  if (!std::is_sorted(points_.begin(), points_.end())) {
    throw InvalidArgument("partition points must be sorted");
  }
  if (!points_.empty() && !(points_.front() > a && points_.back() < b)) {
    throw InvalidArgument("partition points must lie strictly inside (a, b)");
  }
}

Partition Partition::uniform(double a, double b, std::size_t cells) {
  if (cells == 0) throw InvalidArgument("uniform partition needs at least one cell");
  if (!(a < b)) throw InvalidArgument("partition needs a < b");
  std::vector<double> pts;
  pts.reserve(cells - 1);
  const double width = b - a;
  for (std::size_t i = 1; i < cells; ++i) {
    pts.push_back(a + width * static_cast<double>(i) / static_cast<double>(cells));
  }
  return Partition(a, b, std::move(pts));
}

bool Partition::refines(const Partition& coarser) const {
  if (a_ != coarser.a_ || b_ != coarser.b_) return false;
  return std::includes(points_.begin(), points_.end(), coarser.points_.begin(),
                       coarser.points_.end());
}

Partition Partition::refined_randomly(std::uint64_t seed, std::uint32_t level) const {
  const CounterRng rng(seed);
  std::vector<double> pts;
  pts.reserve(2 * points_.size() + 1);
  double left = a_;
  for (std::size_t i = 0; i <= points_.size(); ++i) {
    const double right = i < points_.size() ? points_[i] : b_;
    const double u = 0.25 + 0.5 * rng.uniform(Stream::kPartition, i, level);
    double mid = left + (right - left) * u;
    if (!(mid > left && mid < right)) mid = left + 0.5 * (right - left);
    if (mid > left && mid < right) pts.push_back(mid);
    if (i < points_.size()) pts.push_back(points_[i]);
    left = right;
  }
  return Partition(a_, b_, std::move(pts));
}

// --- incremental ratios ---------------------------------------------------------

namespace {

double ratio_rec(const TwoIndexFn& f, double x, std::span<const double> h) {
  if (h.size() == 1) return f(x, x + h[0]) / h[0];
  const double hk = h.back();
  const auto rest = h.first(h.size() - 1);
  return (ratio_rec(f, x + hk, rest) - ratio_rec(f, x, rest)) / hk;
}

template <typename Term>
double chain_sum(const Partition& p, Term&& term) {
  CompensatedSum s;
  double prev = p.a();
  for (double x : p.points()) {
    s += term(prev, x);
    prev = x;
  }
  s += term(prev, p.b());
  return s.value();
}

bool last_three_within(const std::vector<double>& trace, double tol) {
  if (trace.size() < 4) return false;
  const std::size_t n = trace.size();
  for (std::size_t i = n - 3; i < n; ++i) {
    if (!(std::abs(trace[i] - trace[i - 1]) < tol)) return false;
  }
  return true;
}

}  // namespace

double incremental_ratio(const TwoIndexFn& f, double x, std::span<const double> h) {
  if (h.empty()) throw InvalidArgument("incremental_ratio needs k >= 1 increments");
  for (double hi : h) {
    if (!(hi > 0.0) || !std::isfinite(hi)) {
      throw InvalidArgument("incremental_ratio increments must be finite and positive");
    }
  }
  const double v = ratio_rec(f, x, h);
  if (std::isinf(v)) throw NumericRange("incremental ratio overflowed");
  return v;
}

double partition_sum(const TwoIndexFn& f, const Partition& partition) {
  return chain_sum(partition, [&](double x, double y) { return f(x, y); });
}

double partition_abs_sum(const TwoIndexFn& f, const Partition& partition) {
  return chain_sum(partition, [&](double x, double y) { return std::abs(f(x, y)); });
}

// --- limits along refinement chains --------------------------------------------

SummabilityResult summability_limit(const TwoIndexFn& f, double a, double b,
                                    const RefinementScheme& scheme, double tol) {
  if (!(a < b)) throw InvalidArgument("summability_limit needs a < b");
  SummabilityResult out;
  for_each_refinement(a, b, scheme, [&](int, const Partition& p) {
    out.trace.push_back(partition_sum(f, p));
    out.converged = last_three_within(out.trace, tol);
    return !out.converged;
  });
  out.estimate = out.trace.back();
  return out;
}

VariationResult variation_limit(const TwoIndexFn& f, double a, double b,
                                const RefinementScheme& scheme, double tol,
                                double threshold_scale) {
  if (!(a < b)) throw InvalidArgument("variation_limit needs a < b");
  VariationResult out;
  out.threshold = threshold_scale * std::abs(f(a, b)) + threshold_scale;
  for_each_refinement(a, b, scheme, [&](int, const Partition& p) {
    const double v = partition_abs_sum(f, p);
    out.trace.push_back(v);
    if (!(v <= out.threshold)) {
      out.exceeded_threshold = true;
      return false;
    }
    out.converged = last_three_within(out.trace, tol);
    return !out.converged;
  });
  out.estimate = out.trace.back();
  out.finite = out.converged && !out.exceeded_threshold;
  return out;
}

// --- Lipschitz-class scan -------------------------------------------------------

LipschitzScan lipschitz_scan(const TwoIndexFn& f, int k, const Interval& domain, double h_max,
                             double density, const LipschitzScanOptions& options) {
  if (k < 1) throw InvalidArgument("lipschitz_scan needs k >= 1");
  if (!(density > 0.0)) throw InvalidArgument("lipschitz_scan needs a positive grid density");
  if (!(h_max > 0.0)) throw InvalidArgument("lipschitz_scan needs h_max > 0");
  if (!(domain.lo < domain.hi) || !std::isfinite(domain.lo) || !std::isfinite(domain.hi)) {
    throw InvalidArgument("lipschitz_scan needs a finite nonempty domain");
  }
  LipschitzScan out;
  static constexpr double kMultipliers[] = {1.0, 0.5, 0.25};
  const double length = domain.hi - domain.lo;
  std::vector<double> h(static_cast<std::size_t>(k));

  double scale = h_max;
  for (int s = 0; s < options.scales; ++s, scale /= options.shrink) {
    double spacing = std::min(1.0 / density, scale / 4.0);
    spacing = std::max(spacing, length / static_cast<double>(options.max_points));
    const auto nx = static_cast<std::size_t>(std::ceil(length / spacing)) + 1;
    double sup = 0.0;

    // Enumerate every multiplier combination for the k increments.
    std::size_t combos = 1;
    for (int i = 0; i < k; ++i) combos *= std::size(kMultipliers);
    for (std::size_t c = 0; c < combos && !out.scan_failed; ++c) {
      std::size_t code = c;
      for (int i = 0; i < k; ++i) {
        h[static_cast<std::size_t>(i)] = scale * kMultipliers[code % std::size(kMultipliers)];
        code /= std::size(kMultipliers);
      }
      for (std::size_t ix = 0; ix < nx; ++ix) {
        const double x = std::min(domain.lo + spacing * static_cast<double>(ix), domain.hi);
        double v;
        try {
          v = incremental_ratio(f, x, h);
        } catch (const NumericRange&) {
          v = std::numeric_limits<double>::infinity();
        }
        if (std::isnan(v)) {
          out.scan_failed = true;
          out.failure = "F produced NaN at x = " + std::to_string(x);
          break;
        }
        sup = std::max(sup, std::abs(v));
      }
    }
    out.scale_h.push_back(scale);
    out.scale_sup.push_back(sup);
    if (out.scan_failed) break;
  }
  for (double v : out.scale_sup) out.sup_estimate = std::max(out.sup_estimate, v);
  if (!out.scan_failed && !out.scale_sup.empty()) {
    const double first = out.scale_sup.front();
    const double last = out.scale_sup.back();
    out.bounded = std::isfinite(last) && last <= options.growth_factor * first + 1e-9;
  }
  return out;
}

// --- approximate derivatives -----------------------------------------------------

std::vector<double> default_derivative_schedule(int order) {
  int floor_exp;
  switch (order) {
    case 1: floor_exp = 20; break;
    case 2: floor_exp = 13; break;
    case 3: floor_exp = 10; break;
    case 4: floor_exp = 8; break;
    default: floor_exp = 7; break;
  }
  return geometric_schedule(0.25, 0.5, static_cast<std::size_t>(floor_exp - 1));
}

namespace {

constexpr std::size_t kExtrapolationPoints = 4;

// Value at 0 of the interpolating polynomial through the (h, v) samples.
double extrapolate_to_zero(std::span<const double> h, std::span<const double> v) {
  double total = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    double w = 1.0;
    for (std::size_t j = 0; j < h.size(); ++j) {
      if (j != i) w *= h[j] / (h[j] - h[i]);
    }
    total += w * v[i];
  }
  return total;
}

}  // namespace

DerivativeEstimate approx_derivative(const TwoIndexFn& f, int order, double x,
                                     std::span<const double> h_schedule, double rel_tol) {
  if (order < 1) throw InvalidArgument("approx_derivative needs order >= 1");
  for (std::size_t i = 0; i < h_schedule.size(); ++i) {
    if (!(h_schedule[i] > 0.0) || (i > 0 && !(h_schedule[i] < h_schedule[i - 1]))) {
      throw InvalidArgument("h schedule must be positive and strictly decreasing");
    }
  }
  DerivativeEstimate out;
  std::vector<double> h(static_cast<std::size_t>(order));
  for (std::size_t i = 0; i < h_schedule.size(); ++i) {
    std::fill(h.begin(), h.end(), h_schedule[i]);
    double v;
    try {
      v = incremental_ratio(f, x, h);
    } catch (const NumericRange&) {
      break;
    }
    out.raw.push_back(v);
    if (out.raw.size() >= kExtrapolationPoints) {
      const std::size_t first = i + 1 - kExtrapolationPoints;
      out.extrapolated.push_back(
          extrapolate_to_zero(h_schedule.subspan(first, kExtrapolationPoints),
                              std::span<const double>(out.raw).subspan(first, kExtrapolationPoints)));
    }
    const auto& e = out.extrapolated;
    if (e.size() >= 3) {
      const double last = e.back();
      const double scale = rel_tol * std::max(1.0, std::abs(last));
      const std::size_t n = e.size();
      if (std::abs(e[n - 1] - e[n - 2]) <= scale && std::abs(e[n - 2] - e[n - 3]) <= scale &&
          std::abs(e[n - 1] - e[n - 3]) <= scale) {
        out.exists = true;
        // Exact-ratio cases (constant raw values) report the raw value itself.
        const double r = out.raw.back();
        out.value = (r == out.raw[out.raw.size() - 2] && r == out.raw[out.raw.size() - 3]) ? r : last;
        return out;
      }
    }
  }
  out.exists = false;
  out.value = out.extrapolated.empty() ? std::nan("") : out.extrapolated.back();
  return out;
}

DerivativeEstimate approx_derivative(const ScalarFn& f, int order, double x,
                                     std::span<const double> h_schedule, double rel_tol) {
  return approx_derivative(TwoIndexFn::hat(f), order, x, h_schedule, rel_tol);
}

// --- Taylor-like expansion ------------------------------------------------------

ExpansionReport taylor_check(const TwoIndexFn& f, double a, double b, int order,
                             const TaylorOptions& options) {
  if (order < 1) throw InvalidArgument("taylor_check needs k >= 1");
  if (!(a < b)) throw InvalidArgument("taylor_check needs a < b");
  ExpansionReport rep;
  rep.a = a;
  rep.b = b;
  rep.order = order;

  const auto sum = summability_limit(f, a, b, RefinementScheme::dyadic(options.max_level),
                                     options.summability_tol);
  rep.integral = sum.estimate;
  if (!sum.converged) {
    rep.applicable = false;
    rep.reason = "F is not summable on (a, b) at the configured tolerance";
  }

  CompensatedSum terms_total;
  double weight = 1.0;
  for (int j = 1; j < order && rep.applicable; ++j) {
    weight *= (b - a) / static_cast<double>(j);
    const auto schedule = default_derivative_schedule(j);
    const auto d = approx_derivative(f, j, a, schedule, options.derivative_tol);
    if (!d.exists) {
      rep.applicable = false;
      rep.reason = "approximate derivative of order " + std::to_string(j) + " does not exist at a";
      break;
    }
    rep.terms.emplace_back(j, weight * d.value);
    terms_total += weight * d.value;
  }
  if (!rep.applicable) return rep;

  rep.remainder = rep.integral - terms_total.value();
  rep.identity_gap = std::abs(rep.integral - terms_total.value() - rep.remainder);

  const auto scan = lipschitz_scan(f, order, Interval{a, b}, (b - a) / 4.0, options.scan_density);
  rep.sup_ratio = scan.sup_estimate;
  double kfact = 1.0;
  for (int j = 2; j <= order; ++j) kfact *= j;
  rep.remainder_bound = std::pow(b - a, order) / kfact * rep.sup_ratio;
  rep.within_bound = std::abs(rep.remainder) <=
                     rep.remainder_bound * (1.0 + options.bound_rel_tol) + options.bound_rel_tol;
  rep.success = rep.identity_gap < options.gap_tol && rep.within_bound;
  return rep;
}

}  // namespace pathcalc
