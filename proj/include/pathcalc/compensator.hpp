#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pathcalc/path.hpp"
#include "pathcalc/scalar_fn.hpp"
#include "pathcalc/verdict.hpp"

namespace pathcalc {

// Adapted, right-continuous, increasing processes with a known predictable
// compensator. All catalog compensators are linear in t.
struct IncreasingProcessModel {
  enum class Kind { kPoissonCounting, kCompoundPoissonIncreasing, kPathQV, kDeterministic };

  Kind kind = Kind::kPoissonCounting;
  double rate = 0.0;               // jump intensity, or the slope of a deterministic A
  std::optional<JumpLaw> law;      // compound Poisson jump sizes (nonnegative)
  std::optional<PathModel> path;   // PathQV: A = [X, X] for this model

  static IncreasingProcessModel poisson_counting(double rate);
  static IncreasingProcessModel compound_poisson_increasing(double rate, JumpLaw law);
  // Brownian, compound Poisson and jump-diffusion models only.
  static IncreasingProcessModel path_qv(PathModel model);
  static IncreasingProcessModel deterministic(double slope);

  void validate() const;  // InvalidArgument / UnsupportedModel
  std::string describe() const;
  // The underlying simulated process X: A itself for counting and compound
  // Poisson kinds, the semimartingale for PathQV.
  PathModel underlying() const;
};

const char* to_string(IncreasingProcessModel::Kind kind) noexcept;

// dA^p / dt. UnsupportedModel for kinds outside the catalog.
double compensator_rate(const IncreasingProcessModel& model);
std::function<double(double)> compensator_closed_form(const IncreasingProcessModel& model);

// A along a simulated path of model.underlying(), one value per path point.
// PathQV uses the realized bracket: squared continuous increments plus squared jumps.
std::vector<double> increasing_process(const IncreasingProcessModel& model, const SamplePath& path);

// Left-continuous adapted test integrands.
struct PredictableSpec {
  enum class Kind { kConstant, kIndicatorBefore, kLeftLimitFunction };

  Kind kind = Kind::kConstant;
  double c = 1.0;     // constant value
  double tau = 0.0;   // 1{t <= tau}
  std::optional<ScalarFn> h;  // h(X_{t-}), |h| <= bound
  double bound = 0.0;

  static PredictableSpec constant(double c);
  static PredictableSpec indicator_before(double tau);
  static PredictableSpec left_limit_function(ScalarFn h, double bound);

  std::string describe() const;
};

struct CompensatorOptions {
  std::size_t n_steps = 1024;
  double horizon = 1.0;
  std::uint64_t base_seed = 1;
  double slack_se = 3.0;
  // Replaces the closed-form rate on the A^p side (negative controls).
  std::optional<double> override_rate;
};

// Pathwise integrals of one simulated path.
struct CompensatorSample {
  double y_da = 0.0;   // sum of Y at increments of A
  double y_dap = 0.0;  // quadrature of Y against A^p
};

CompensatorSample compensator_sample(const IncreasingProcessModel& model, const PredictableSpec& y,
                                     const SamplePath& path, double rate);

struct CompensatorVerdict {
  std::string model;
  std::string integrand;
  std::size_t n_paths = 0;
  double horizon = 1.0;
  double rate_used = 0.0;
  double mean_y_da = 0.0, se_y_da = 0.0;
  double mean_y_dap = 0.0, se_y_dap = 0.0;
  double difference = 0.0;
  double combined_se = 0.0;  // sqrt(se_y_da^2 + se_y_dap^2)
  double paired_se = 0.0;    // standard error of the per-path difference
  VerdictRecord verdict;
  bool pass() const noexcept { return verdict.pass(); }
};

// Monte Carlo check of E int Y dA = E int Y dA^p; path p uses
// derive_seed(base_seed, p).
CompensatorVerdict verify_compensator(const IncreasingProcessModel& model, const PredictableSpec& y,
                                      std::size_t n_paths, const CompensatorOptions& options = {});

struct IncrementCheck {
  double s = 0.0, t = 0.0;
  double mean = 0.0;
  double se = 0.0;
  bool pass = false;
};

struct MartingaleVerdict {
  std::string model;
  std::size_t n_paths = 0;
  double rate_used = 0.0;
  std::vector<IncrementCheck> increments;
  VerdictRecord verdict;
  bool pass() const noexcept { return verdict.pass(); }
};

// (A_t - A^p_t) - (A_s - A^p_s) has mean zero for consecutive checkpoints.
MartingaleVerdict martingale_check(const IncreasingProcessModel& model, std::size_t n_paths,
                                   std::span<const double> checkpoints,
                                   const CompensatorOptions& options = {});

}  // namespace pathcalc
