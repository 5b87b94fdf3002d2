#include "pathcalc/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "pathcalc/error.hpp"

namespace pathcalc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double param(const FunctionSpec& spec, const std::string& key, double fallback) {
  auto it = spec.params.find(key);
  return it == spec.params.end() ? fallback : it->second;
}

std::vector<double> list(const FunctionSpec& spec, const std::string& key) {
  auto it = spec.lists.find(key);
  if (it == spec.lists.end()) throw ConfigError(spec.name + ": missing list parameter '" + key + "'");
  return it->second;
}

ScalarFn make_abs(double kink) {
  return ScalarFn("abs", [kink](double x) { return std::abs(x - kink); })
      .with_derivative(1, [kink](double x) { return sign_right(x - kink); })
      .with_derivative(2, [](double) { return 0.0; })
      .with_lipschitz({-kInf, kInf}, 1.0);
}

ScalarFn make_piecewise_linear(const FunctionSpec& spec) {
  const auto breaks = list(spec, "breakpoints");
  const auto slopes = list(spec, "slopes");
  if (slopes.size() != breaks.size() + 1) {
    throw ConfigError("piecewise_linear: need exactly one more slope than breakpoints");
  }
  if (!std::is_sorted(breaks.begin(), breaks.end()) ||
      std::adjacent_find(breaks.begin(), breaks.end()) != breaks.end()) {
    throw ConfigError("piecewise_linear: breakpoints must be strictly increasing");
  }
  const double intercept = param(spec, "intercept", 0.0);
  auto eval = [breaks, slopes, intercept](double x) {
    double v = intercept + slopes[0] * x;
    for (std::size_t k = 0; k < breaks.size(); ++k) {
      v += (slopes[k + 1] - slopes[k]) * std::max(x - breaks[k], 0.0);
    }
    return v;
  };
  auto slope_at = [breaks, slopes](double x) {
    const auto k = std::upper_bound(breaks.begin(), breaks.end(), x) - breaks.begin();
    return slopes[static_cast<std::size_t>(k)];
  };
  double lip = 0.0;
  for (double s : slopes) lip = std::max(lip, std::abs(s));
  return ScalarFn("piecewise_linear", eval)
      .with_derivative(1, slope_at)
      .with_derivative(2, [](double) { return 0.0; })
      .with_lipschitz({-kInf, kInf}, lip);
}

ScalarFn make_polynomial(const FunctionSpec& spec) {
  const auto coeffs = list(spec, "coefficients");  // c0 + c1 x + ...
  if (coeffs.empty()) throw ConfigError("polynomial: empty coefficient list");
  auto horner = [](std::vector<double> c) {
    return [c = std::move(c)](double x) {
      double v = 0.0;
      for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
      return v;
    };
  };
  ScalarFn f("polynomial", horner(coeffs));
  std::vector<double> d = coeffs;
  for (int order = 1; order <= static_cast<int>(coeffs.size()); ++order) {
    std::vector<double> next;
    for (std::size_t i = 1; i < d.size(); ++i) next.push_back(d[i] * static_cast<double>(i));
    if (next.empty()) next.push_back(0.0);
    d = next;
    f = f.with_derivative(order, horner(d));
  }
  // Lipschitz on [-1, 1] and [-10, 10]: sup |f'| bounded by sum |i c_i| R^{i-1}.
  for (double r : {1.0, 10.0}) {
    double lip = 0.0;
    for (std::size_t i = 1; i < coeffs.size(); ++i) {
      lip += std::abs(coeffs[i]) * static_cast<double>(i) * std::pow(r, static_cast<double>(i - 1));
    }
    f = f.with_lipschitz({-r, r}, lip);
  }
  return f;
}

}  // namespace

const std::vector<CatalogEntry>& function_catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"abs", "|x|", true},
      {"square", "x^2", true},
      {"cube", "x^3", false},
      {"quartic", "x^4", true},
      {"x_abs_x_half", "x|x|/2 (primitive of |x|)", false},
      {"sign_primitive", "|x - kink| (primitive of sign; param kink, default 0)", true},
      {"sign", "sign(x) with sign(0) = +1 (right-continuous)", false},
      {"neg_abs", "-|x|", false},
      {"neg_sign", "-sign(x)", false},
      {"piecewise_linear",
       "continuous piecewise-linear; lists breakpoints, slopes (one more); param intercept",
       false},
      {"polynomial", "sum c_i x^i; list coefficients", false},
      {"linear", "a x + b; params a (default 1), b (default 0)", true},
      {"constant", "c; param c (default 1)", true},
      {"cos", "cos(x)", false},
      {"sin", "sin(x)", false},
      {"tanh", "tanh(x)", false},
      {"bump", "1 / (1 + x^2)", false},
      {"x_sin_inv_x", "x sin(1/x), 0 at the origin (unbounded variation near 0)", false},
  };
  return entries;
}

ScalarFn make_function(const FunctionSpec& spec) {
  const std::string& n = spec.name;
  if (n == "abs") return make_abs(0.0);
  if (n == "sign_primitive") return make_abs(param(spec, "kink", 0.0)).relabeled("sign_primitive");
  if (n == "square") {
    return ScalarFn("square", [](double x) { return x * x; })
        .with_derivative(1, [](double x) { return 2.0 * x; })
        .with_derivative(2, [](double) { return 2.0; })
        .with_derivative(3, [](double) { return 0.0; })
        .with_lipschitz({-1, 1}, 2.0)
        .with_lipschitz({-10, 10}, 20.0);
  }
  if (n == "cube") {
    return ScalarFn("cube", [](double x) { return x * x * x; })
        .with_derivative(1, [](double x) { return 3.0 * x * x; })
        .with_derivative(2, [](double x) { return 6.0 * x; })
        .with_derivative(3, [](double) { return 6.0; })
        .with_lipschitz({-1, 1}, 3.0)
        .with_lipschitz({-10, 10}, 300.0);
  }
  if (n == "quartic") {
    return ScalarFn("quartic", [](double x) { return x * x * x * x; })
        .with_derivative(1, [](double x) { return 4.0 * x * x * x; })
        .with_derivative(2, [](double x) { return 12.0 * x * x; })
        .with_derivative(3, [](double x) { return 24.0 * x; })
        .with_derivative(4, [](double) { return 24.0; })
        .with_lipschitz({-1, 1}, 4.0)
        .with_lipschitz({-10, 10}, 4000.0);
  }
  if (n == "x_abs_x_half") {
    return ScalarFn("x_abs_x_half", [](double x) { return 0.5 * x * std::abs(x); })
        .with_derivative(1, [](double x) { return std::abs(x); })
        .with_derivative(2, [](double x) { return sign_right(x); })
        .with_lipschitz({-1, 1}, 1.0)
        .with_lipschitz({-10, 10}, 10.0);
  }
  if (n == "sign") {
    return ScalarFn("sign", [](double x) { return sign_right(x); });
  }
  if (n == "neg_abs") return make_abs(0.0).scaled(-1.0).relabeled("neg_abs");
  if (n == "neg_sign") return ScalarFn("neg_sign", [](double x) { return -sign_right(x); });
  if (n == "piecewise_linear") return make_piecewise_linear(spec);
  if (n == "polynomial") return make_polynomial(spec);
  if (n == "linear") {
    const double a = param(spec, "a", 1.0), b = param(spec, "b", 0.0);
    return ScalarFn("linear", [a, b](double x) { return a * x + b; })
        .with_derivative(1, [a](double) { return a; })
        .with_derivative(2, [](double) { return 0.0; })
        .with_lipschitz({-kInf, kInf}, std::abs(a));
  }
  if (n == "constant") {
    const double c = param(spec, "c", 1.0);
    return ScalarFn("constant", [c](double) { return c; })
        .with_derivative(1, [](double) { return 0.0; })
        .with_derivative(2, [](double) { return 0.0; })
        .with_lipschitz({-kInf, kInf}, 0.0);
  }
  if (n == "cos") {
    return ScalarFn("cos", [](double x) { return std::cos(x); })
        .with_derivative(1, [](double x) { return -std::sin(x); })
        .with_derivative(2, [](double x) { return -std::cos(x); })
        .with_derivative(3, [](double x) { return std::sin(x); })
        .with_lipschitz({-kInf, kInf}, 1.0);
  }
  if (n == "sin") {
    return ScalarFn("sin", [](double x) { return std::sin(x); })
        .with_derivative(1, [](double x) { return std::cos(x); })
        .with_derivative(2, [](double x) { return -std::sin(x); })
        .with_derivative(3, [](double x) { return -std::cos(x); })
        .with_lipschitz({-kInf, kInf}, 1.0);
  }
  if (n == "tanh") {
    return ScalarFn("tanh", [](double x) { return std::tanh(x); })
        .with_derivative(1, [](double x) {
          const double c = std::cosh(x);
          return 1.0 / (c * c);
        })
        .with_lipschitz({-kInf, kInf}, 1.0);
  }
  if (n == "bump") {
    return ScalarFn("bump", [](double x) { return 1.0 / (1.0 + x * x); })
        .with_derivative(1, [](double x) { return -2.0 * x / ((1.0 + x * x) * (1.0 + x * x)); })
        .with_lipschitz({-kInf, kInf}, 0.65);  // sup |f'| = 3 sqrt(3) / 8
  }
  if (n == "x_sin_inv_x") {
    return ScalarFn("x_sin_inv_x", [](double x) { return x == 0.0 ? 0.0 : x * std::sin(1.0 / x); });
  }
  throw ConfigError("unknown catalog function '" + n + "'");
}

std::vector<double> function_kinks(const FunctionSpec& spec) {
  const std::string& n = spec.name;
  if (n == "abs" || n == "x_abs_x_half" || n == "sign" || n == "neg_abs" || n == "neg_sign") {
    return {0.0};
  }
  if (n == "sign_primitive") return {param(spec, "kink", 0.0)};
  if (n == "piecewise_linear") return list(spec, "breakpoints");
  if (n == "x_sin_inv_x") return {0.0};
  return {};
}

}  // namespace pathcalc
