#include "pathcalc/two_index_fn.hpp"

#include <cmath>

namespace pathcalc {

const char* to_string(TwoIndexKind kind) noexcept {
  switch (kind) {
    case TwoIndexKind::kHat: return "hat";
    case TwoIndexKind::kWeightedHat: return "weighted_hat";
    case TwoIndexKind::kStar: return "star";
    case TwoIndexKind::kQuadratic: return "quadratic";
    case TwoIndexKind::kCustom: return "custom";
  }
  return "unknown";
}

TwoIndexFn TwoIndexFn::hat(const ScalarFn& f) {
  return TwoIndexFn(TwoIndexKind::kHat, "hat(" + f.label() + ")",
                    [f = f.eval()](double x, double y) { return x == y ? 0.0 : f(y) - f(x); },
                    [f = f.eval()](double x, double y) { return std::abs(f(y)) + std::abs(f(x)); },
                    {f});
}

TwoIndexFn TwoIndexFn::weighted_hat(const ScalarFn& g, const ScalarFn& f) {
  return TwoIndexFn(TwoIndexKind::kWeightedHat, g.label() + "*hat(" + f.label() + ")",
                    [g = g.eval(), f = f.eval()](double x, double y) {
                      return x == y ? 0.0 : g(x) * (f(y) - f(x));
                    },
                    [g = g.eval(), f = f.eval()](double x, double y) {
                      return std::abs(g(x)) * (std::abs(f(y)) + std::abs(f(x)));
                    },
                    {g, f});
}

TwoIndexFn TwoIndexFn::star(const ScalarFn& f, const ScalarFn& g) {
  return TwoIndexFn(TwoIndexKind::kStar, f.label() + "*" + g.label(),
                    [f = f.eval(), g = g.eval()](double x, double y) {
                      return x == y ? 0.0 : f(y) - f(x) - g(x) * (y - x);
                    },
                    [f = f.eval(), g = g.eval()](double x, double y) {
                      return std::abs(f(y)) + std::abs(f(x)) + std::abs(g(x) * (y - x));
                    },
                    {f, g});
}

TwoIndexFn TwoIndexFn::quadratic() {
  return TwoIndexFn(TwoIndexKind::kQuadratic, "F0",
                    [](double x, double y) { return (y - x) * (y - x); },
                    [](double x, double y) { return (y - x) * (y - x); }, {});
}

TwoIndexFn TwoIndexFn::custom(std::string label, TwoIndexEval eval) {
  return TwoIndexFn(TwoIndexKind::kCustom, std::move(label),
                    [e = eval](double x, double y) { return x == y ? 0.0 : e(x, y); },
                    [e = eval](double x, double y) { return x == y ? 0.0 : std::abs(e(x, y)); },
                    {});
}

TwoIndexFn TwoIndexFn::scaled(double c) const {
  return TwoIndexFn(TwoIndexKind::kCustom, std::to_string(c) + "*" + label_,
                    [e = eval_, c](double x, double y) { return c * e(x, y); },
                    [m = magnitude_, c](double x, double y) { return std::abs(c) * m(x, y); },
                    sources_);
}

TwoIndexFn operator+(const TwoIndexFn& a, const TwoIndexFn& b) {
  std::vector<ScalarFn> sources = a.sources_;
  sources.insert(sources.end(), b.sources_.begin(), b.sources_.end());
  return TwoIndexFn(TwoIndexKind::kCustom, a.label_ + "+" + b.label_,
                    [ea = a.eval_, eb = b.eval_](double x, double y) {
                      return ea(x, y) + eb(x, y);
                    },
                    [ma = a.magnitude_, mb = b.magnitude_](double x, double y) {
                      return ma(x, y) + mb(x, y);
                    },
                    std::move(sources));
}

}  // namespace pathcalc
