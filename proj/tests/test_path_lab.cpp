#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "pathcalc/error.hpp"
#include "pathcalc/numeric.hpp"
#include "pathcalc/path.hpp"
#include "pathcalc/riemann.hpp"

using namespace pathcalc;

namespace {

SamplePath make_path(std::vector<double> t, std::vector<double> x, std::vector<double> pre,
                     std::vector<double> j) {
  return SamplePath::from_columns(std::move(t), std::move(x), std::move(pre), std::move(j));
}

bool same_bits(const SamplePath& a, const SamplePath& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.time(i) != b.time(i) || a.value(i) != b.value(i) || a.pre_value(i) != b.pre_value(i) ||
        a.jump_sizes()[i] != b.jump_sizes()[i]) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("simulate: deterministic drift gives X_t = t exactly") {
  const auto model = PathModel::brownian(0.0, 1.0);
  for (std::size_t n : {1u, 3u, 7u, 8u, 1000u, 4096u}) {
    const auto p = simulate(model, n, 1.0, 42);
    REQUIRE(p.size() == n + 1);
    CHECK(p.horizon() == 1.0);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(p.value(i) == p.time(i));
    CHECK(p.jumps().empty());
  }
}

TEST_CASE("simulate: finite-variation linear path") {
  const auto model = PathModel::finite_variation({{0.0, 0.0}, {1.0, 1.0}});
  const auto p = simulate(model, 8, 1.0, 7);
  REQUIRE(p.size() == 9);
  CHECK(p.jumps().empty());
  for (std::size_t i = 0; i <= 8; ++i) CHECK(p.value(i) == 0.125 * static_cast<double>(i));
}

TEST_CASE("simulate: Poisson jump count has mean rate * T") {
  const auto model = PathModel::compound_poisson(2.0, JumpLaw::two_point(0.5, 1.0, -1.0));
  std::vector<double> counts;
  std::vector<double> terminal;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const auto p = simulate(model, 16, 1.0, seed);
    counts.push_back(static_cast<double>(p.jumps().size()));
    terminal.push_back(p.value(p.last()));
    for (const auto& j : p.jumps()) {
      CHECK(p.value(j.index) == p.pre_value(j.index) + j.size);
      CHECK((j.size == 1.0 || j.size == -1.0));
    }
  }
  const auto s = sample_stats(counts);
  CHECK(std::abs(s.mean - 2.0) <= 3.0 * s.std_error());
  // Poisson: variance equals mean
  CHECK(std::abs(s.variance - 2.0) < 0.15);
  const auto x = sample_stats(terminal);
  CHECK(std::abs(x.mean) <= 3.0 * x.std_error());
}

TEST_CASE("simulate: Var(X_T) matches sigma^2 T") {
  for (double sigma : {0.5, 1.0, 2.0}) {
    const auto model = PathModel::brownian(sigma, 0.3);
    std::vector<double> xt;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
      xt.push_back(simulate(model, 32, 2.0, seed).value(32));
    }
    const auto s = sample_stats(xt);
    CHECK(std::abs(s.mean - 0.6) <= 3.0 * s.std_error());
    // SE of the sample variance for normals: var * sqrt(2 / (n - 1))
    const double var_se = s.variance * std::sqrt(2.0 / 9999.0);
    CHECK(std::abs(s.variance - sigma * sigma * 2.0) <= 3.0 * var_se);
  }
}

TEST_CASE("simulate: determinism and seed sensitivity") {
  const auto model =
      PathModel::jump_diffusion(0.8, 0.1, 3.0, JumpLaw::normal(0.2, 0.5), 1.0);
  const auto a = simulate(model, 512, 1.5, 99);
  const auto b = simulate(model, 512, 1.5, 99);
  const auto c = simulate(model, 512, 1.5, 100);
  CHECK(same_bits(a, b));
  CHECK_FALSE(same_bits(a, c));
  CHECK(a.value(0) == 1.0);
  // each jump is a dedicated grid point
  CHECK(a.size() == 513 + a.jumps().size());
  for (const auto& j : a.jumps()) {
    const double t = a.time(j.index);
    CHECK(t * 512.0 / 1.5 != std::floor(t * 512.0 / 1.5));
  }
}

TEST_CASE("simulate: invalid arguments") {
  const auto bm = PathModel::brownian(1.0);
  CHECK_THROWS_AS(simulate(bm, 0, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(simulate(bm, 4, 0.0, 1), InvalidArgument);
  CHECK_THROWS_AS(simulate(bm, 4, -1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(PathModel::brownian(-1.0), InvalidArgument);
  CHECK_THROWS_AS(PathModel::compound_poisson(-1.0, JumpLaw::uniform(0, 1)), InvalidArgument);
  CHECK_THROWS_AS(JumpLaw::two_point(1.5, 1, 2), InvalidArgument);
  CHECK_THROWS_AS(JumpLaw::uniform(2, 1), InvalidArgument);
  CHECK_THROWS_AS(JumpLaw::normal(0, -1), InvalidArgument);
  CHECK_THROWS_AS(PathModel::finite_variation({}), InvalidArgument);
  CHECK_THROWS_AS(PathModel::finite_variation({{0, 0}, {0, 1}}), InvalidArgument);
  PathModel broken = bm;
  broken.sigma = std::nan("");
  CHECK_THROWS_AS(simulate(broken, 4, 1.0, 1), InvalidArgument);
}

TEST_CASE("jump law moments") {
  const auto u = JumpLaw::uniform(0.0, 1.0);
  CHECK(u.mean() == doctest::Approx(0.5));
  CHECK(u.second_moment() == doctest::Approx(1.0 / 3.0));
  CHECK(u.nonnegative());
  const auto t = JumpLaw::two_point(0.25, 2.0, -1.0);
  CHECK(t.mean() == doctest::Approx(0.25 * 2.0 - 0.75));
  CHECK(t.second_moment() == doctest::Approx(0.25 * 4.0 + 0.75));
  CHECK_FALSE(t.nonnegative());
  const auto g = JumpLaw::normal(1.0, 2.0);
  CHECK(g.second_moment() == doctest::Approx(5.0));
  // Monte Carlo oracle for the sampler
  const CounterRng rng(5);
  for (const auto& law : {u, t, g}) {
    std::vector<double> xs, x2;
    for (std::uint64_t k = 0; k < 20000; ++k) {
      const double v = law.sample(rng, k);
      xs.push_back(v);
      x2.push_back(v * v);
    }
    const auto s = sample_stats(xs);
    const auto s2 = sample_stats(x2);
    CHECK(std::abs(s.mean - law.mean()) <= 3.0 * s.std_error());
    CHECK(std::abs(s2.mean - law.second_moment()) <= 3.0 * s2.std_error());
  }
}

TEST_CASE("SamplePath invariants are enforced") {
  CHECK_NOTHROW(make_path({0, 0.5, 1}, {0, 3, 3}, {0, 1, 3}, {0, 2, 0}));
  CHECK_THROWS_AS(make_path({0, 0.5, 0.5}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}), InvalidArgument);
  CHECK_THROWS_AS(make_path({0.1, 0.5, 1}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}), InvalidArgument);
  CHECK_THROWS_AS(make_path({0, 0.5, 1}, {0, 2, 2}, {0, 1, 2}, {0, 0.5, 0}), InvalidArgument);
  CHECK_THROWS_AS(make_path({0, 0.5, 1}, {0, 2, 2}, {0, 1, 2}, {0, 0, 0}), InvalidArgument);
  CHECK_THROWS_AS(make_path({0, 0.5, 1}, {0, INFINITY, 0}, {0, INFINITY, 0}, {0, 0, 0}),
                  InvalidArgument);
  CHECK_THROWS_AS(make_path({0, 1}, {1, 1}, {0, 1}, {1, 0}), InvalidArgument);
  const auto p = make_path({0, 0.5, 1}, {0, 3, 3}, {0, 1, 3}, {0, 2, 0});
  CHECK(p.index_at_or_before(0.49) == 0);
  CHECK(p.index_at_or_before(0.5) == 1);
  CHECK(p.index_at_or_before(7.0) == 2);
  CHECK(p.jumps_between(0, 1).size() == 1);
  CHECK(p.jumps_between(1, 2).empty());
}

TEST_CASE("split_jumps: examples") {
  SUBCASE("no jumps") {
    const auto p = simulate(PathModel::brownian(1.0), 64, 1.0, 3);
    const auto s = split_jumps(p, 0.5);
    CHECK(s.big_jumps.empty());
    CHECK(same_bits(s.continuous_part, p));
  }
  SUBCASE("one jump of size 2 at t = 0.5") {
    const auto p = make_path({0, 0.25, 0.5, 0.75, 1}, {0, 0.1, 2.2, 2.1, 2.3},
                             {0, 0.1, 0.2, 2.1, 2.3}, {0, 0, 2, 0, 0});
    const auto s = split_jumps(p, 1.0);
    REQUIRE(s.big_jumps.size() == 1);
    CHECK(s.big_jumps[0].time == 0.5);
    CHECK(s.big_jumps[0].size == 2.0);
    const auto& c = s.continuous_part;
    CHECK(c.jumps().empty());
    CHECK(c.value(2) == c.pre_value(2));
    CHECK(c.value(2) == doctest::Approx(0.2));
    CHECK(c.value(4) == doctest::Approx(0.3));
    CHECK(same_bits(add_jumps(s), p));
  }
  SUBCASE("threshold must be positive") {
    const auto p = simulate(PathModel::brownian(1.0), 8, 1.0, 3);
    CHECK_THROWS_AS(split_jumps(p, 0.0), InvalidArgument);
  }
}

TEST_CASE("split_jumps: reconstruction is bit-exact on jump diffusions") {
  const auto model =
      PathModel::jump_diffusion(1.0, 0.0, 20.0, JumpLaw::normal(0.0, 0.3), 0.0);
  std::size_t removed = 0, kept = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto p = simulate(model, 256, 1.0, seed);
    for (double a : {0.1, 0.5}) {
      const auto s = split_jumps(p, a);
      CHECK(same_bits(add_jumps(s), p));
      for (const auto& j : s.big_jumps) CHECK(std::abs(j.size) > a);
      for (const auto& j : s.continuous_part.jumps()) CHECK(std::abs(j.size) <= a);
      // X0 = X - removed jumps, up to rounding
      double acc = 0.0;
      std::size_t k = 0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        while (k < s.big_jumps.size() && s.big_jumps[k].index <= i) acc += s.big_jumps[k++].size;
        CHECK(std::abs(s.continuous_part.value(i) - (p.value(i) - acc)) <=
              1e-14 * (1.0 + std::abs(acc) + std::abs(p.value(i))));
      }
      removed += s.big_jumps.size();
      kept += s.continuous_part.jumps().size();
    }
  }
  CHECK(removed > 0);
  CHECK(kept > 0);
}

TEST_CASE("csv round trip and format errors") {
  const auto model = PathModel::jump_diffusion(1.0, 0.2, 5.0, JumpLaw::uniform(-1, 1), 0.3);
  const auto p = simulate(model, 100, 1.0, 11);
  std::stringstream ss;
  write_path_csv(p, ss);
  const auto q = read_path_csv(ss);
  CHECK(same_bits(p, q));

  std::istringstream bad_header("t,x\n0,0\n");
  CHECK_THROWS_AS(read_path_csv(bad_header), FormatError);
  std::istringstream bad_row("time,value,pre_jump_value,jump_size\n0,0,0\n");
  CHECK_THROWS_AS(read_path_csv(bad_row), FormatError);
  std::istringstream bad_invariant("time,value,pre_jump_value,jump_size\n0,0,0,0\n1,2,1,0\n");
  CHECK_THROWS_AS(read_path_csv(bad_invariant), FormatError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_path_csv(empty), FormatError);
}

TEST_CASE("realized_qv examples") {
  SUBCASE("linear finite-variation path vanishes like T^2 / 2^k") {
    const auto p = simulate(PathModel::finite_variation({{0, 0}, {1, 1}}), 1 << 12, 1.0, 0);
    double prev = INFINITY;
    for (int k = 0; k <= 12; ++k) {
      const double qv = realized_qv(p, dyadic_grid(p, k));
      CHECK(qv == doctest::Approx(1.0 / std::exp2(k)).epsilon(1e-12));
      CHECK(qv < prev);
      prev = qv;
    }
  }
  SUBCASE("pure two-point jumps") {
    const auto p = make_path({0, 0.3, 0.7, 1}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 1, -1, 0});
    CHECK(realized_qv(p, dyadic_grid(p, 0)) == 2.0);  // jump indices are always grid points
    CHECK(realized_qv(p, dyadic_grid(p, 3)) == 2.0);
  }
  SUBCASE("Brownian quadratic variation at t = 1") {
    const auto bm = PathModel::brownian(1.0);
    std::vector<double> qv;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      const auto p = simulate(bm, 1 << 12, 1.0, derive_seed(17, seed));
      qv.push_back(realized_qv(p, dyadic_grid(p, 12)));
    }
    const auto s = sample_stats(qv);
    CHECK(s.mean >= 0.95);
    CHECK(s.mean <= 1.05);
    CHECK(std::abs(s.mean - 1.0) <= 3.0 * s.std_error());
  }
}
