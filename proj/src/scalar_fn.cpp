#include "pathcalc/scalar_fn.hpp"

#include <algorithm>
#include <cmath>

#include "pathcalc/error.hpp"

namespace pathcalc {

std::optional<double> ScalarFn::lipschitz_constant(const Interval& on) const {
  std::optional<double> best;
  for (const auto& b : lipschitz_) {
    if (b.interval.contains(on) && (!best || b.constant < *best)) best = b.constant;
  }
  return best;
}

ScalarFn ScalarFn::with_derivative(int order, RealFn d) const& {
  if (order < 1) throw InvalidArgument("derivative order must be >= 1");
  ScalarFn out = *this;
  out.derivatives_[order] = std::move(d);
  return out;
}

ScalarFn ScalarFn::with_lipschitz(Interval interval, double constant) const& {
  if (!(constant >= 0.0)) throw InvalidArgument("Lipschitz constant must be >= 0");
  if (!(interval.lo < interval.hi)) throw InvalidArgument("Lipschitz interval must be nonempty");
  ScalarFn out = *this;
  out.lipschitz_.push_back({interval, constant});
  return out;
}

ScalarFn ScalarFn::relabeled(std::string label) const& {
  ScalarFn out = *this;
  out.label_ = std::move(label);
  return out;
}

ScalarFn ScalarFn::scaled(double c) const {
  ScalarFn out(label_ + "*" + std::to_string(c), [f = eval_, c](double x) { return c * f(x); });
  for (const auto& [j, d] : derivatives_) {
    out.derivatives_[j] = [d, c](double x) { return c * d(x); };
  }
  for (const auto& b : lipschitz_) out.lipschitz_.push_back({b.interval, std::abs(c) * b.constant});
  return out;
}

LipschitzCheck check_lipschitz(const ScalarFn& f, int points, double clip, double rel_tol) {
  LipschitzCheck out;
  if (points < 2) throw InvalidArgument("check_lipschitz needs at least two grid points");
  for (const auto& bound : f.lipschitz_bounds()) {
    const double lo = std::max(bound.interval.lo, -clip);
    const double hi = std::min(bound.interval.hi, clip);
    if (!(lo < hi)) continue;
    std::vector<double> xs(static_cast<std::size_t>(points));
    std::vector<double> fs(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
      fs[i] = f(xs[i]);
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
      for (std::size_t j = i + 1; j < xs.size(); ++j) {
        const double ratio = std::abs(fs[j] - fs[i]) / (xs[j] - xs[i]);
        if (ratio > out.worst_ratio) {
          out.worst_ratio = ratio;
          out.x = xs[i];
          out.y = xs[j];
        }
        if (ratio > bound.constant * (1.0 + rel_tol) + rel_tol) out.holds = false;
      }
    }
  }
  return out;
}

namespace {

double centred_difference(const RealFn& f, int order, double x) {
  switch (order) {
    case 1: {
      const double h = 1e-6;
      return (f(x + h) - f(x - h)) / (2 * h);
    }
    case 2: {
      const double h = 1e-4;
      return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h);
    }
    case 3: {
      const double h = 1e-3;
      return (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) / (2 * h * h * h);
    }
    case 4: {
      const double h = 1e-2;
      return (f(x + 2 * h) - 4 * f(x + h) + 6 * f(x) - 4 * f(x - h) + f(x - 2 * h)) /
             (h * h * h * h);
    }
    default:
      return std::nan("");
  }
}

}  // namespace

DerivativeCheck check_declared_derivatives(const ScalarFn& f, const std::vector<double>& grid,
                                           double tol, const std::vector<double>& kinks,
                                           double kink_guard) {
  DerivativeCheck out;
  for (int order : f.derivative_orders()) {
    if (order > 4) continue;
    // The j-th declared derivative is checked against differences of the
    // (j-1)-th one when that is declared, which keeps step sizes small.
    const RealFn* lower = order == 1 ? &f.eval() : f.derivative(order - 1);
    const int diff_order = lower ? 1 : order;
    const RealFn& base = lower ? *lower : f.eval();
    const RealFn& declared = *f.derivative(order);
    const double guard = kink_guard * (diff_order + 1);
    for (double x : grid) {
      bool near_kink = false;
      for (double k : kinks) near_kink = near_kink || std::abs(x - k) < guard;
      if (near_kink) continue;
      const double fd = centred_difference(base, diff_order, x);
      const double d = declared(x);
      const double err = std::abs(fd - d) / std::max(1.0, std::abs(d));
      if (err > out.worst_error) {
        out.worst_error = err;
        out.at = x;
        out.order = order;
      }
      if (!(err <= tol)) out.holds = false;
    }
  }
  return out;
}

}  // namespace pathcalc
