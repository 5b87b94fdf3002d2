#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace pathcalc {

// Philox4x32-10 (Salmon et al., SC'11). Counter-based: every draw is a pure
// function of (key, counter), so any sample of any path can be regenerated
// without replaying a sequence. Output matches the Random123 reference.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr int kRounds = 10;

  static constexpr Counter generate(Counter ctr, Key key) noexcept {
    for (int r = 0; r < kRounds; ++r) {
      if (r > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      ctr = round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static constexpr Counter round(const Counter& c, const Key& k) noexcept {
    const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

// Named sub-streams used by the simulators. Changing these changes goldens.
enum class Stream : std::uint32_t {
  kDiffusion = 1,
  kJumpArrival = 2,
  kJumpSize = 3,
  kPartition = 4,
  kAuxiliary = 5,
};

// Addressable random variates keyed by a 64-bit seed. The counter layout is
// (index lo, index hi, substream, stream).
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  constexpr std::uint64_t seed() const noexcept {
    return std::uint64_t{key_[0]} | (std::uint64_t{key_[1]} << 32);
  }

  constexpr std::array<std::uint64_t, 2> bits(Stream stream, std::uint64_t index,
                                              std::uint32_t substream = 0) const noexcept {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(index),
                                  static_cast<std::uint32_t>(index >> 32), substream,
                                  static_cast<std::uint32_t>(stream)};
    const auto out = Philox4x32::generate(ctr, key_);
    return {std::uint64_t{out[0]} | (std::uint64_t{out[1]} << 32),
            std::uint64_t{out[2]} | (std::uint64_t{out[3]} << 32)};
  }

  // Uniform on [0, 1).
  double uniform(Stream stream, std::uint64_t index, std::uint32_t substream = 0) const noexcept {
    return to_unit(bits(stream, index, substream)[0]);
  }

  // Uniform on (0, 1]; safe as a logarithm argument.
  double uniform_open(Stream stream, std::uint64_t index,
                      std::uint32_t substream = 0) const noexcept {
    return to_unit_open(bits(stream, index, substream)[0]);
  }

  // Standard normal via Box-Muller on one counter block.
  double normal(Stream stream, std::uint64_t index, std::uint32_t substream = 0) const noexcept {
    const auto b = bits(stream, index, substream);
    const double u1 = to_unit_open(b[0]);
    const double u2 = to_unit(b[1]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Unit-rate exponential.
  double exponential(Stream stream, std::uint64_t index,
                     std::uint32_t substream = 0) const noexcept {
    return -std::log(uniform_open(stream, index, substream));
  }

 private:
  static constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

  static constexpr double to_unit(std::uint64_t w) noexcept {
    return static_cast<double>(w >> 11) * kTwoPow53Inv;
  }
  static constexpr double to_unit_open(std::uint64_t w) noexcept {
    return (static_cast<double>(w >> 11) + 1.0) * kTwoPow53Inv;
  }

  Philox4x32::Key key_;
};

// Per-path seeds derived from a base seed (splitmix64 finaliser).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Sequential UniformRandomBitGenerator over a single Philox stream, for code
// that wants std:: distributions or shuffles.
class PhiloxEngine {
 public:
  using result_type = std::uint64_t;

  explicit PhiloxEngine(std::uint64_t seed, Stream stream = Stream::kAuxiliary,
                        std::uint32_t substream = 0) noexcept
      : rng_(seed), stream_(stream), substream_(substream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (lane_ == 2) {
      block_ = rng_.bits(stream_, counter_++, substream_);
      lane_ = 0;
    }
    return block_[lane_++];
  }

  double uniform() noexcept { return static_cast<double>((*this)() >> 11) / 9007199254740992.0; }

 private:
  CounterRng rng_;
  Stream stream_;
  std::uint32_t substream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> block_{};
  int lane_ = 2;
};

}  // namespace pathcalc
