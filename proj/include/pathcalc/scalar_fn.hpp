#pragma once

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pathcalc {

using RealFn = std::function<double(double)>;

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
  bool contains(const Interval& other) const noexcept {
    return lo <= other.lo && other.hi <= hi;
  }
};

struct LipschitzBound {
  Interval interval;
  double constant = 0.0;
};

// A real function with optional declared derivatives and per-interval
// Lipschitz constants. Immutable once built; copies share the callables.
class ScalarFn {
 public:
  ScalarFn() = default;
  ScalarFn(std::string label, RealFn eval) : label_(std::move(label)), eval_(std::move(eval)) {}

  double operator()(double x) const { return eval_(x); }

  const std::string& label() const noexcept { return label_; }
  const RealFn& eval() const noexcept { return eval_; }

  // Declared derivative of order j (right derivative at kinks), if any.
  const RealFn* derivative(int order) const {
    auto it = derivatives_.find(order);
    return it == derivatives_.end() ? nullptr : &it->second;
  }
  std::vector<int> derivative_orders() const {
    std::vector<int> out;
    for (const auto& [j, _] : derivatives_) out.push_back(j);
    return out;
  }

  const std::vector<LipschitzBound>& lipschitz_bounds() const noexcept { return lipschitz_; }

  // Smallest declared constant over an interval covering `on`, if any.
  std::optional<double> lipschitz_constant(const Interval& on) const;

  ScalarFn with_derivative(int order, RealFn d) const&;
  ScalarFn with_lipschitz(Interval interval, double constant) const&;
  ScalarFn relabeled(std::string label) const&;

  // c * f with derivatives and bounds rescaled.
  ScalarFn scaled(double c) const;

 private:
  std::string label_;
  RealFn eval_;
  std::map<int, RealFn> derivatives_;
  std::vector<LipschitzBound> lipschitz_;
};

struct LipschitzCheck {
  bool holds = true;
  double worst_ratio = 0.0;  // max |f(y)-f(x)| / |y-x| seen
  double x = 0.0, y = 0.0;   // pair attaining it
};

// Spot-checks every declared bound on a uniform grid of `points` nodes per
// interval (infinite intervals are clipped to [-clip, clip]).
LipschitzCheck check_lipschitz(const ScalarFn& f, int points = 401, double clip = 10.0,
                               double rel_tol = 1e-12);

struct DerivativeCheck {
  bool holds = true;
  int order = 0;
  double worst_error = 0.0;
  double at = 0.0;
};

// Compares declared derivatives against centred finite differences on `grid`.
// Points within `kink_guard` of a listed kink are skipped.
DerivativeCheck check_declared_derivatives(const ScalarFn& f, const std::vector<double>& grid,
                                           double tol = 1e-5,
                                           const std::vector<double>& kinks = {},
                                           double kink_guard = 1e-3);

}  // namespace pathcalc
