#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace pathcalc {

// Neumaier compensated accumulator. All pathwise and partition sums go through
// this so that equal inputs in equal order give bit-identical totals.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_total(std::span<const double> xs) noexcept {
  CompensatedSum s;
  for (double x : xs) s += x;
  return s.value();
}

struct SampleStats {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_error() const noexcept {
    return count > 1 ? std::sqrt(variance / static_cast<double>(count)) : 0.0;
  }
};

// Two-pass mean/variance in index order (fixed reduction order for goldens).
inline SampleStats sample_stats(std::span<const double> xs) noexcept {
  SampleStats s;
  s.count = xs.size();
  if (xs.empty()) return s;
  s.mean = compensated_total(xs) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    CompensatedSum ss;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.variance = ss.value() / static_cast<double>(xs.size() - 1);
  }
  return s;
}

// Geometric schedule h0, h0*ratio, ... (count entries).
inline std::vector<double> geometric_schedule(double h0, double ratio, std::size_t count) {
  std::vector<double> h(count);
  double v = h0;
  for (auto& x : h) {
    x = v;
    v *= ratio;
  }
  return h;
}

}  // namespace pathcalc
