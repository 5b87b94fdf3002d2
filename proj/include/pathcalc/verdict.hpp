#pragma once

#include <string>
#include <vector>

namespace pathcalc {

struct CheckResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string detail;
};

struct VerdictRecord {
  std::string subject;
  std::vector<CheckResult> checks;

  bool pass() const noexcept {
    if (checks.empty()) return false;
    for (const auto& c : checks) {
      if (!c.pass) return false;
    }
    return true;
  }
  void add(std::string name, double value, double threshold, bool ok, std::string detail = {}) {
    checks.push_back({std::move(name), value, threshold, ok, std::move(detail)});
  }
};

}  // namespace pathcalc
