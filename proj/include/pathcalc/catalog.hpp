#pragma once

#include <map>
#include <string>
#include <vector>

#include "pathcalc/scalar_fn.hpp"

namespace pathcalc {

// Named scalar function plus numeric parameters, as written in configs.
struct FunctionSpec {
  std::string name;
  std::map<std::string, double> params;
  std::map<std::string, std::vector<double>> lists;
};

struct CatalogEntry {
  std::string name;
  std::string description;
  bool convex = false;  // for every admissible parameter choice
};

const std::vector<CatalogEntry>& function_catalog();

// Throws ConfigError for unknown names or inconsistent parameters.
ScalarFn make_function(const FunctionSpec& spec);
inline ScalarFn make_function(const std::string& name) { return make_function(FunctionSpec{name, {}, {}}); }

// Points where the function (or its first derivative) is not smooth.
std::vector<double> function_kinks(const FunctionSpec& spec);

// Right derivative of x -> sign(x): +1 at 0.
inline double sign_right(double x) noexcept { return x >= 0.0 ? 1.0 : -1.0; }

}  // namespace pathcalc
