#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pathcalc/scalar_fn.hpp"

namespace pathcalc {

using TwoIndexEval = std::function<double(double, double)>;

enum class TwoIndexKind {
  kHat,          // f(y) - f(x)
  kWeightedHat,  // g(x) (f(y) - f(x))
  kStar,         // f(y) - f(x) - g(x) (y - x)
  kQuadratic,    // (y - x)^2
  kCustom,
};

const char* to_string(TwoIndexKind kind) noexcept;

// A generalised increment F(x, y) with F(x, x) = 0. Every constructor below
// guarantees the diagonal vanishes exactly; custom callables are wrapped to
// return 0 on the diagonal.
class TwoIndexFn {
 public:
  static TwoIndexFn hat(const ScalarFn& f);
  static TwoIndexFn weighted_hat(const ScalarFn& g, const ScalarFn& f);
  static TwoIndexFn star(const ScalarFn& f, const ScalarFn& g);
  static TwoIndexFn quadratic();
  static TwoIndexFn custom(std::string label, TwoIndexEval eval);

  double operator()(double x, double y) const { return eval_(x, y); }
  // Sum of the absolute values of the terms combined in F(x, y); rounding in
  // F(x, y) is a few ulps of this.
  double magnitude(double x, double y) const { return magnitude_(x, y); }

  TwoIndexKind kind() const noexcept { return kind_; }
  const std::string& label() const noexcept { return label_; }
  // Underlying scalar functions in constructor order (f for hat, (g, f) for
  // weighted hat, (f, g) for star; empty otherwise).
  const std::vector<ScalarFn>& sources() const noexcept { return sources_; }

  TwoIndexFn scaled(double c) const;
  friend TwoIndexFn operator+(const TwoIndexFn& a, const TwoIndexFn& b);

 private:
  TwoIndexFn(TwoIndexKind kind, std::string label, TwoIndexEval eval, TwoIndexEval magnitude,
             std::vector<ScalarFn> sources)
      : kind_(kind),
        label_(std::move(label)),
        eval_(std::move(eval)),
        magnitude_(std::move(magnitude)),
        sources_(std::move(sources)) {}

  TwoIndexKind kind_ = TwoIndexKind::kCustom;
  std::string label_;
  TwoIndexEval eval_;
  TwoIndexEval magnitude_;
  std::vector<ScalarFn> sources_;
};

}  // namespace pathcalc
