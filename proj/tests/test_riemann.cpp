#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "pathcalc/catalog.hpp"
#include "pathcalc/error.hpp"
#include "pathcalc/numeric.hpp"
#include "pathcalc/riemann.hpp"

using namespace pathcalc;

namespace {

std::vector<double> grid_times(const SamplePath& p, const RiemannGrid& g) {
  std::vector<double> t;
  for (auto i : g.indices) t.push_back(p.time(i));
  return t;
}

SamplePath line_path(std::size_t n) {
  return simulate(PathModel::brownian(0.0, 1.0), n, 1.0, 0);
}

SamplePath jump_path(std::uint64_t seed, std::size_t n = 1024) {
  return simulate(PathModel::jump_diffusion(1.0, 0.1, 6.0, JumpLaw::normal(0.0, 0.7)), n, 1.0,
                  seed);
}

const ScalarFn& square() {
  static const ScalarFn f = make_function("square");
  return f;
}

}  // namespace

TEST_CASE("riemann_grid examples") {
  const auto p = line_path(8);
  CHECK(grid_times(p, dyadic_grid(p, 0)) == std::vector<double>{0.0, 1.0});
  CHECK(grid_times(p, dyadic_grid(p, 2)) == std::vector<double>{0, .25, .5, .75, 1});
  CHECK(grid_times(p, hitting_grid(p, 0.5)) == std::vector<double>{0, 0.5, 1});
  CHECK(grid_times(p, riemann_grid(p, GridScheme::kHittingTimes, 0.25)) ==
        std::vector<double>{0, .25, .5, .75, 1});
  CHECK(dyadic_grid(p, 2).mesh == 0.25);
  // finer than the sampling collapses onto every index
  CHECK(dyadic_grid(p, 10).indices.size() == 9);
  CHECK_THROWS_AS(hitting_grid(p, 0.1), ResolutionExhausted);
  CHECK_THROWS_AS(hitting_grid(p, 0.0), InvalidArgument);
  CHECK_THROWS_AS(dyadic_grid(p, -1), InvalidArgument);
}

TEST_CASE("grids contain every jump and are strictly increasing") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto p = jump_path(seed);
    for (const auto& g : {dyadic_grid(p, 0), dyadic_grid(p, 5), hitting_grid(p, 0.1)}) {
      CHECK(g.indices.front() == 0);
      CHECK(g.indices.back() == p.last());
      for (std::size_t k = 1; k < g.indices.size(); ++k) CHECK(g.indices[k] > g.indices[k - 1]);
      for (const auto& j : p.jumps()) {
        CHECK(std::binary_search(g.indices.begin(), g.indices.end(), j.index));
      }
    }
  }
}

TEST_CASE("hitting grid points are lattice exits") {
  // brute-force oracle: between consecutive grid points (no jumps) X stays
  // strictly inside the open band around the lattice point of the left end
  const auto p = simulate(PathModel::brownian(1.0), 4096, 1.0, 8);
  const double eps = 0.05;
  const auto g = hitting_grid(p, eps);
  double m = std::round(p.value(0) / eps);
  for (std::size_t k = 1; k + 1 < g.indices.size(); ++k) {
    for (std::size_t i = g.indices[k - 1] + 1; i < g.indices[k]; ++i) {
      CHECK(p.value(i) < (m + 1) * eps);
      CHECK(p.value(i) > (m - 1) * eps);
    }
    const double x = p.value(g.indices[k]);
    CHECK((x >= (m + 1) * eps || x <= (m - 1) * eps));
    m = x >= (m + 1) * eps ? std::floor(x / eps) : std::ceil(x / eps);
  }
}

TEST_CASE("pathwise_sum: telescoping, quadratic and star identities") {
  const auto hat = PathFunctional(TwoIndexFn::hat(make_function("cos")));
  const auto quad = PathFunctional(TwoIndexFn::quadratic());
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto p = jump_path(seed);
    const double target = std::cos(p.value(p.last())) - std::cos(p.value(0));
    for (const auto& g : {dyadic_grid(p, 3), dyadic_grid(p, 9), hitting_grid(p, 0.2)}) {
      CHECK(std::abs(pathwise_sum(hat, p, g) - target) <= 1e-14 * static_cast<double>(g.cells()));
      CHECK(pathwise_sum(quad, p, g) == realized_qv(p, g));
    }
  }
}

TEST_CASE("pathwise_sum: Star(x^2, 2x)") {
  const ScalarFn two_x = make_function(FunctionSpec{"linear", {{"a", 2.0}}, {}});
  const auto star = PathFunctional(TwoIndexFn::star(square(), two_x));
  const auto star_ll = PathFunctional(TwoIndexFn::star(square(), two_x), true);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto bm = simulate(PathModel::brownian(1.0, 0.0, 0.5), 2048, 1.0, seed);
    const auto g = dyadic_grid(bm, 8);
    // f(X_T) - f(X_0) - 2 sum X_{T_{n-1}} dX, computed directly
    CompensatedSum si;
    for (std::size_t n = 1; n < g.indices.size(); ++n) {
      const double a = bm.value(g.indices[n - 1]);
      si += 2.0 * a * (bm.value(g.indices[n]) - a);
    }
    const double xt = bm.value(bm.last()), x0 = bm.value(0);
    const double qv = realized_qv(bm, g);
    const double sum = pathwise_sum(star, bm, g);
    CHECK(std::abs(sum - qv) <= 1e-13 * (1.0 + qv));
    CHECK(std::abs(sum - (xt * xt - x0 * x0 - si.value())) <= 1e-12);

    // with the left-limit rule, jumps contribute (dX)^2 separately
    const auto p = jump_path(seed);
    const auto gj = dyadic_grid(p, 6);
    CompensatedSum oracle;
    for (std::size_t n = 1; n < gj.indices.size(); ++n) {
      const std::size_t i = gj.indices[n - 1], j = gj.indices[n];
      const double d = p.pre_value(j) - p.value(i);
      oracle += d * d;
      if (p.is_jump(j)) oracle += p.jump_sizes()[j] * p.jump_sizes()[j];
    }
    CHECK(std::abs(pathwise_sum(star_ll, p, gj) - oracle.value()) <= 1e-12 * (1 + oracle.value()));
  }
}

TEST_CASE("left-limit rule splits every jump inside a pair") {
  const auto p = SamplePath::from_columns({0, 0.25, 0.5, 0.75, 1}, {0, 1, 1.5, 0.5, 0.7},
                                          {0, 0, 1.5, 1.0, 0.7}, {0, 1, 0, -0.5, 0});
  const auto quad = PathFunctional(TwoIndexFn::quadratic(), true);
  // X: 0 -(jump 1)-> 1 -> 1.5 -> 1.0 -(jump -0.5)-> 0.5 -> 0.7
  const double expected = 0 + 1 + (1.0 - 1.0) * (1.0 - 1.0) + 0.25 + 0.04;
  CHECK(quad(p, 0, 4) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(quad(p, 0, 1) == 1.0);
  CHECK(PathFunctional(TwoIndexFn::quadratic())(p, 0, 4) == doctest::Approx(0.49));
}

TEST_CASE("pathwise_sum: scaling and linearity") {
  const auto f = PathFunctional(TwoIndexFn::star(make_function("abs"), make_function("sign")));
  const auto q = PathFunctional(TwoIndexFn::quadratic());
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = simulate(PathModel::brownian(1.0), 1024, 1.0, seed);
    const auto g = dyadic_grid(p, 9);
    const double sf = pathwise_sum(f, p, g), sq = pathwise_sum(q, p, g);
    CHECK(pathwise_sum(f.scaled(4.0), p, g) == 4.0 * sf);  // power of two: exact
    CHECK(pathwise_sum(q.scaled(-0.5), p, g) == -0.5 * sq);
    const double c = 0.3;
    CHECK(std::abs(pathwise_sum(f.scaled(c), p, g) - c * sf) <= 4e-16 * std::abs(c * sf) + 1e-300);
    CHECK(std::abs(pathwise_sum(f + q, p, g) - (sf + sq)) <= 1e-15 * (std::abs(sf) + std::abs(sq)) * 8);
  }
  CHECK_THROWS_AS(f + PathFunctional(TwoIndexFn::quadratic(), true), InvalidArgument);
}

TEST_CASE("stopped_functional") {
  const auto q = PathFunctional(TwoIndexFn::quadratic());
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = jump_path(seed, 512);
    const auto g = dyadic_grid(p, 7);
    CHECK(pathwise_sum(stopped_functional(q, p.horizon()), p, g) == pathwise_sum(q, p, g));
    CHECK(pathwise_sum(stopped_functional(q, 0.0), p, g) == 0.0);
    // sigma = T/2 is a dyadic grid point: brute-force truncated sum
    const auto half = stopped_functional(q, 0.5);
    CompensatedSum oracle;
    for (std::size_t n = 1; n < g.indices.size(); ++n) {
      if (p.time(g.indices[n]) > 0.5) break;
      const double d = p.value(g.indices[n]) - p.value(g.indices[n - 1]);
      oracle += d * d;
    }
    CHECK(pathwise_sum(half, p, g) == oracle.value());
    CHECK(pathwise_sum(half, p, g) == pathwise_sum(q, p, truncate_grid(g, p, 0.5)));
    // stopping composes by taking the earlier time
    CHECK(pathwise_sum(stopped_functional(half, 0.9), p, g) == pathwise_sum(half, p, g));
  }
  CHECK_THROWS_AS(stopped_functional(q, -1.0), InvalidArgument);
}

TEST_CASE("t_x examples") {
  const auto q = PathFunctional(TwoIndexFn::quadratic());
  const ScalarFn two_x = make_function(FunctionSpec{"linear", {{"a", 2.0}}, {}});
  const auto star = PathFunctional(TwoIndexFn::star(square(), two_x));
  const auto p = simulate(PathModel::brownian(1.0), 256, 1.0, 4);
  for (std::size_t i = 0; i < p.size(); i += 7) {
    for (std::size_t j = i + 1; j < p.size(); j += 5) {
      if (p.value(i) == p.value(j)) continue;
      CHECK(t_x(q, p, i, j) == 1.0);
      CHECK(t_x(star, p, i, j) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  const auto flat = simulate(PathModel::brownian(0.0), 8, 1.0, 0);
  CHECK_THROWS_AS(t_x(q, flat, 0, 3), OutsideDomain);
  CHECK(t_x_at(q, p, 0.0, 1.0) == 1.0);
}

TEST_CASE("t_x of Star(f, g) is bounded by half the Lipschitz constant of g") {
  // g = |x| has Lipschitz constant 1, so |T_X(f*g)| <= 1/2 for f = x|x|/2
  const auto f = PathFunctional(
      TwoIndexFn::star(make_function("x_abs_x_half"), make_function("abs")));
  double worst = 0.0;
  std::size_t violations = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = simulate(PathModel::brownian(1.0), 512, 1.0, seed);
    for (std::size_t i = 0; i < p.size(); i += 3) {
      for (std::size_t j = i + 1; j < p.size(); j += 3) {
        if (p.value(i) == p.value(j)) continue;
        const auto tx = t_x_bounded(f, p, i, j);
        violations += std::abs(tx.value) > 0.5 + tx.rounding_bound;
        worst = std::max(worst, std::abs(tx.value));
      }
    }
  }
  CHECK(violations == 0);
  CHECK(worst > 0.4);
  // exactly representable pair on the positive side: T_X = 1/2
  const auto pair = SamplePath::from_columns({0, 1}, {0.25, 0.75}, {0.25, 0.75}, {0, 0});
  CHECK(t_x(f, pair, 0, 1) == 0.5);
}

TEST_CASE("class_scan examples") {
  std::vector<SamplePath> paths;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    paths.push_back(simulate(PathModel::brownian(1.0), 4096, 1.0, seed));
  }
  const auto lip = PathFunctional(
      TwoIndexFn::star(make_function("x_abs_x_half"), make_function("abs")));
  const auto s1 = class_scan(lip, paths, BoundType::kBounded);
  CHECK(s1.holds);
  CHECK(s1.estimate <= 0.5 + ClassScanOptions{}.max_rounding);
  CHECK(s1.pairs_scanned > 0);

  const auto convex = PathFunctional(TwoIndexFn::star(make_function("abs"), make_function("sign")));
  const auto s2 = class_scan(convex, paths, BoundType::kLowerBounded);
  CHECK(s2.holds);
  CHECK(s2.estimate >= 0.0);

  const auto concave =
      PathFunctional(TwoIndexFn::star(make_function("neg_abs"), make_function("neg_sign")));
  const auto s3 = class_scan(concave, paths, BoundType::kBounded);
  CHECK_FALSE(s3.holds);
  CHECK(s3.level_extreme.back() > 2.0 * s3.level_extreme.front());
  CHECK_FALSE(class_scan(concave, paths, BoundType::kLowerBounded).holds);
  // upper-bounded counterpart of the concave case is the convex one
  CHECK(class_scan(concave.scaled(-1.0), paths, BoundType::kLowerBounded).holds);
  CHECK_THROWS_AS(class_scan(lip, {}, BoundType::kBounded), InvalidArgument);
}

TEST_CASE("limit_in_probability") {
  const std::vector<SchemeSpec> schemes{{GridScheme::kDyadic, 1.0}, {GridScheme::kHittingTimes, 1.0}};
  ConvergenceOptions opt;
  opt.n_steps = 1 << 14;
  opt.base_seed = 2024;
  SUBCASE("telescoping functional: zero discrepancy") {
    const std::vector<int> levels{4, 6, 8};
    const auto d = limit_in_probability(PathFunctional(TwoIndexFn::hat(make_function("sin"))),
                                        PathModel::brownian(1.0), schemes, levels, 50, opt);
    CHECK(d.verdict);
    CHECK(d.cross_tail_prob == 0.0);
    for (const auto& tp : d.tail_probs) {
      for (double v : tp) CHECK(v == 0.0);
    }
    for (std::size_t p = 0; p < 50; ++p) {
      CHECK(std::abs(d.estimates[0][2][p] - d.estimates[1][0][p]) <= 1e-12);
    }
  }
  SUBCASE("quadratic variation: dyadic and hitting-time sequences agree") {
    const std::vector<int> levels{8, 10, 12};
    const auto d = limit_in_probability(PathFunctional(TwoIndexFn::quadratic()),
                                        PathModel::brownian(1.0), schemes, levels, 200, opt);
    CHECK(d.notes.empty());
    CHECK(d.cross_tail_prob <= 0.05);
    const auto s = sample_stats(d.estimates[1][2]);
    CHECK(std::abs(s.mean - 1.0) <= 3.0 * s.std_error());
  }
  SUBCASE("sum of |dX| diverges") {
    const auto absinc = PathFunctional(
        TwoIndexFn::custom("abs_increment", [](double x, double y) { return std::abs(y - x); }));
    const std::vector<int> levels{6, 8, 10};
    const auto d = limit_in_probability(absinc, PathModel::brownian(1.0), schemes, levels, 50, opt);
    CHECK_FALSE(d.verdict);
    CHECK(d.tail_probs[0].back() > 0.9);
  }
  SUBCASE("unresolvable lattice is reported, not raised") {
    const std::vector<int> levels{8, 30};
    opt.n_steps = 256;
    const auto d = limit_in_probability(PathFunctional(TwoIndexFn::quadratic()),
                                        PathModel::brownian(1.0), schemes, levels, 5, opt);
    CHECK_FALSE(d.verdict);
    CHECK_FALSE(d.notes.empty());
  }
  CHECK_THROWS_AS(limit_in_probability(PathFunctional(TwoIndexFn::quadratic()),
                                       PathModel::brownian(1.0), std::span(schemes).first(1),
                                       std::vector<int>{1, 2}, 5, opt),
                  InvalidArgument);
}
