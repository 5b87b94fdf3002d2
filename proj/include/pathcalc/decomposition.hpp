#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pathcalc/path.hpp"
#include "pathcalc/riemann.hpp"
#include "pathcalc/scalar_fn.hpp"
#include "pathcalc/verdict.hpp"

namespace pathcalc {

// Closed-form sharp brackets of the test-bed models:
// <X^c>_t = sigma^2 t, <X>_t = <X^c>_t + rate E[J^2] t.
struct BracketModel {
  double continuous_rate = 0.0;
  double jump_rate = 0.0;

  static BracketModel from_model(const PathModel& model);
  double continuous(double t) const noexcept { return continuous_rate * t; }
  double jump_part(double t) const noexcept { return jump_rate * t; }
  double total(double t) const noexcept { return (continuous_rate + jump_rate) * t; }
};

enum class DecompositionMode { kIto, kTanaka };

const char* to_string(DecompositionMode mode) noexcept;

struct DecompositionOptions {
  std::optional<ScalarFn> g;   // replaces the (declared or approximate) first derivative
  std::optional<ScalarFn> f2;  // replaces the second derivative
};

struct JumpRecord {
  std::size_t index = 0;
  double time = 0.0;
  double size = 0.0;
  double term = 0.0;            // f(X_s) - f(X_{s-}) - g(X_{s-}) dX_s
  double residual_jump = 0.0;   // A_s - A_{s-}
};

// Term series on the grid times. Per grid point:
//   lhs = stochastic_integral + compensator_term + jump_term + residual + identity_gap
// compensator_term integrates f''/2 at the left point against the realized
// continuous bracket (X_{T_n -} - X_{T_{n-1}})^2; compensator_closed_form uses
// the model's <X^c> instead, and bracket_defect is their difference.
struct DecompositionReport {
  DecompositionMode mode = DecompositionMode::kIto;
  std::uint64_t path_seed = 0;
  std::string f_label;
  std::string g_label;
  GridScheme scheme = GridScheme::kDyadic;
  double grid_param = 0.0;
  bool applicable = true;
  std::string reason;

  std::vector<double> times;
  std::vector<double> lhs;
  std::vector<double> stochastic_integral;
  std::vector<double> compensator_term;
  std::vector<double> compensator_closed_form;
  std::vector<double> jump_term;
  std::vector<double> residual;
  std::vector<double> identity_gap;
  std::vector<JumpRecord> jumps;

  // sd of the bracket defect at the terminal time under the model, used to
  // judge refinement behaviour within Monte Carlo noise
  double bracket_defect_sd = 0.0;

  double bracket_defect() const noexcept {
    return compensator_term.empty() ? 0.0 : compensator_term.back() - compensator_closed_form.back();
  }
  double max_abs_residual() const noexcept;
  double max_abs_gap() const noexcept;
  double min_residual_increment() const noexcept;
  double max_residual_increment() const noexcept;
};

// Left-point sums of g(X_{T_{n-1}}) over each cell, with the cell ending at a
// jump split as g(X_{T_{n-1}})(X_{s-} - X_{T_{n-1}}) + g(X_{s-}) dX_s.
// Cumulative values at each grid point (first entry 0).
std::vector<double> stochastic_integral(const SamplePath& path, const ScalarFn& g,
                                        const RiemannGrid& grid);

DecompositionReport ito_decompose(const SamplePath& path, const ScalarFn& f,
                                  const RiemannGrid& grid, const BracketModel& bracket,
                                  const DecompositionOptions& options = {});
DecompositionReport tanaka_decompose(const SamplePath& path, const ScalarFn& f,
                                     const RiemannGrid& grid, const BracketModel& bracket,
                                     const DecompositionOptions& options = {});

// (1 / 2 eps) Leb{s <= t: |X_s - a| < eps} with X linear between grid points
// (the continuous part only; jumps are instantaneous). t defaults to the horizon.
double local_time_oracle(const SamplePath& path, double level, double eps,
                         std::optional<double> until = std::nullopt);

struct VerifyOptions {
  double tol = 1e-8;             // ito: max |residual|
  double increment_tol = 1e-6;   // tanaka: A increments >= -increment_tol
  double jump_tol = 1e-3;        // tanaka: |A_s - A_{s-}| at jump times
  double gap_tol = 1e-8;         // identity_gap at every level
  double defect_slack_sd = 3.0;  // refinement check slack, in combined bracket_defect_sd units
};

// The numbers verify_report looks at, so persisted reports can be re-judged.
struct ReportStats {
  bool applicable = true;
  std::string reason;
  std::size_t path_jumps = 0;
  double max_abs_gap = 0.0;
  double max_abs_residual = 0.0;
  double residual_start = 0.0;
  double min_increment = 0.0;
  double max_jump = 0.0;  // max |A_s - A_{s-}| over path jumps
  double bracket_defect = 0.0;
  double bracket_defect_sd = 0.0;
};

ReportStats summarize(const DecompositionReport& report);

// reports: one path at increasing refinement (coarse first). The refinement
// check needs at least two levels.
VerdictRecord verify_report(std::span<const DecompositionReport> reports, DecompositionMode mode,
                            const VerifyOptions& options = {});
VerdictRecord verify_report(const DecompositionReport& report, DecompositionMode mode,
                            const VerifyOptions& options = {});
VerdictRecord verify_stats(std::span<const ReportStats> levels, DecompositionMode mode,
                           const VerifyOptions& options = {});

}  // namespace pathcalc
