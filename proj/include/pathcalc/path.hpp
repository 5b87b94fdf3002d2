#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pathcalc/philox.hpp"

namespace pathcalc {

// Law of a single jump size. All supported laws have finite second moment.
class JumpLaw {
 public:
  enum class Kind { kTwoPoint, kUniform, kNormal };

  static JumpLaw two_point(double p, double first, double second);
  static JumpLaw uniform(double lo, double hi);
  static JumpLaw normal(double mean, double sd);

  Kind kind() const noexcept { return kind_; }
  // (p, first, second) | (lo, hi, -) | (mean, sd, -)
  const std::array<double, 3>& params() const noexcept { return params_; }

  double sample(const CounterRng& rng, std::uint64_t index) const;
  double mean() const noexcept;
  double second_moment() const noexcept;
  bool nonnegative() const noexcept;
  std::string describe() const;

 private:
  JumpLaw(Kind kind, std::array<double, 3> params) : kind_(kind), params_(params) {}
  Kind kind_;
  std::array<double, 3> params_;
};

struct Knot {
  double time;
  double value;
};

// Test-bed semimartingale models.
struct PathModel {
  enum class Kind { kBrownian, kCompoundPoisson, kJumpDiffusion, kFiniteVariation };

  Kind kind = Kind::kBrownian;
  double sigma = 1.0;
  double drift = 0.0;
  double start = 0.0;  // X_0 (ignored by kFiniteVariation, whose knots fix it)
  double rate = 0.0;   // jump intensity
  std::optional<JumpLaw> jump_law;
  std::vector<Knot> knots;  // kFiniteVariation: piecewise-linear, flat after the last knot

  static PathModel brownian(double sigma, double drift = 0.0, double start = 0.0);
  static PathModel compound_poisson(double rate, JumpLaw law, double start = 0.0);
  static PathModel jump_diffusion(double sigma, double drift, double rate, JumpLaw law,
                                  double start = 0.0);
  static PathModel finite_variation(std::vector<Knot> knots);

  void validate() const;  // throws InvalidArgument
  bool has_jumps() const noexcept { return rate > 0.0 && jump_law.has_value(); }
  double diffusion_sigma() const noexcept {
    return kind == Kind::kBrownian || kind == Kind::kJumpDiffusion ? sigma : 0.0;
  }
  std::string describe() const;
};

const char* to_string(PathModel::Kind kind) noexcept;

struct Jump {
  std::size_t index;  // grid index of the jump time
  double size;
};

// A discretised cadlag trajectory. values[i] is X at times[i] (post-jump);
// pre_values[i] is X_{t-}, equal to values[i] except at jump indices where
// values[i] == pre_values[i] + jump size exactly.
class SamplePath {
 public:
  // Validates every invariant; jump_sizes has one entry per time (0 = none).
  static SamplePath from_columns(std::vector<double> times, std::vector<double> values,
                                 std::vector<double> pre_values, std::vector<double> jump_sizes,
                                 std::uint64_t seed = 0,
                                 std::optional<PathModel> model = std::nullopt);

  std::size_t size() const noexcept { return times_.size(); }
  std::size_t last() const noexcept { return times_.size() - 1; }
  double horizon() const noexcept { return times_.back(); }

  std::span<const double> times() const noexcept { return times_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> pre_values() const noexcept { return pre_values_; }
  std::span<const double> jump_sizes() const noexcept { return jump_sizes_; }
  const std::vector<Jump>& jumps() const noexcept { return jumps_; }

  double time(std::size_t i) const { return times_[i]; }
  double value(std::size_t i) const { return values_[i]; }
  double pre_value(std::size_t i) const { return pre_values_[i]; }
  bool is_jump(std::size_t i) const { return jump_sizes_[i] != 0.0; }

  // Largest index with time <= t (0 for t before the start).
  std::size_t index_at_or_before(double t) const noexcept;
  // Jumps with index in (from, to].
  std::span<const Jump> jumps_between(std::size_t from, std::size_t to) const noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  const std::optional<PathModel>& model() const noexcept { return model_; }

  // Root-mean-square of the continuous increments pre_values[i] - values[i-1].
  double continuous_rms_increment() const noexcept;

 private:
  SamplePath() = default;
  std::vector<double> times_, values_, pre_values_, jump_sizes_;
  std::vector<Jump> jumps_;
  std::uint64_t seed_ = 0;
  std::optional<PathModel> model_;
};

// Uniform Euler grid of n_steps cells on [0, T] with every jump time inserted
// as an extra grid point. Pure function of (model, n_steps, T, seed).
SamplePath simulate(const PathModel& model, std::size_t n_steps, double horizon,
                    std::uint64_t seed);

struct RemovedJump {
  std::size_t index;
  double time;
  double size;
};

// X^0 = X - (sum of removed jumps so far). Floating subtraction is not
// invertible by addition, so the split also keeps the per-index rounding
// residue: original = (X^0 + S) + residue, evaluated left to right.
struct JumpSplit {
  SamplePath continuous_part;
  std::vector<RemovedJump> big_jumps;
  std::vector<double> value_residue;
  std::vector<double> pre_residue;
};

// Removes every jump with |size| > threshold (threshold > 0).
JumpSplit split_jumps(const SamplePath& path, double threshold);
// Inverse of split_jumps, bit for bit.
SamplePath add_jumps(const JumpSplit& split);

// CSV columns: time,value,pre_jump_value,jump_size (17 significant digits).
void write_path_csv(const SamplePath& path, std::ostream& out);
SamplePath read_path_csv(std::istream& in);

}  // namespace pathcalc
