#include <doctest.h>

#include <cmath>
#include <vector>

#include "pathcalc/catalog.hpp"
#include "pathcalc/compensator.hpp"
#include "pathcalc/decomposition.hpp"
#include "pathcalc/error.hpp"
#include "pathcalc/numeric.hpp"
#include "pathcalc/philox.hpp"

using namespace pathcalc;

namespace {

using IPM = IncreasingProcessModel;

const JumpLaw kUnit = JumpLaw::uniform(0.0, 1.0);

CompensatorOptions fast(std::uint64_t seed = 11) {
  CompensatorOptions o;
  o.n_steps = 256;
  o.base_seed = seed;
  return o;
}

}  // namespace

TEST_CASE("closed-form compensators") {
  CHECK(compensator_closed_form(IPM::poisson_counting(3.0))(1.0) == 3.0);
  CHECK(compensator_closed_form(IPM::poisson_counting(3.0))(0.25) == 0.75);
  CHECK(compensator_closed_form(IPM::compound_poisson_increasing(2.0, kUnit))(1.0) == 1.0);
  CHECK(compensator_closed_form(IPM::path_qv(PathModel::brownian(1.0)))(0.7) == 0.7);
  CHECK(compensator_closed_form(IPM::path_qv(PathModel::brownian(2.0, 5.0)))(1.0) == 4.0);
  CHECK(compensator_closed_form(IPM::deterministic(1.0))(0.3) == 0.3);

  // <X> = <X^c> + jump part, additively
  const auto jd = PathModel::jump_diffusion(0.7, 0.1, 3.0, JumpLaw::normal(0.2, 0.5));
  const auto b = BracketModel::from_model(jd);
  for (double t : {0.0, 0.5, 1.0, 2.0}) {
    CHECK(compensator_closed_form(IPM::path_qv(jd))(t) == b.continuous(t) + b.jump_part(t));
  }
  // 3 * E[J^2] with J ~ N(0.2, 0.5^2)
  CHECK(compensator_rate(IPM::path_qv(jd)) == doctest::Approx(0.49 + 3.0 * (0.04 + 0.25)));
}

TEST_CASE("A^p is nonnegative, nondecreasing, continuous and starts at 0") {
  const std::vector<IPM> models{
      IPM::poisson_counting(3.0), IPM::compound_poisson_increasing(2.0, kUnit),
      IPM::path_qv(PathModel::brownian(1.0)),
      IPM::path_qv(PathModel::jump_diffusion(0.5, 0.0, 2.0, JumpLaw::two_point(0.5, -1, 1))),
      IPM::deterministic(2.0)};
  for (const auto& m : models) {
    const auto ap = compensator_closed_form(m);
    CHECK(ap(0.0) == 0.0);
    double prev = 0.0;
    for (int k = 1; k <= 1000; ++k) {
      const double t = k / 1000.0;
      CHECK(ap(t) >= prev);
      CHECK(ap(t) - prev <= compensator_rate(m) * 1e-3 * (1 + 1e-12));
      prev = ap(t);
    }
  }
}

TEST_CASE("invalid and unsupported models") {
  CHECK_THROWS_AS(IPM::poisson_counting(0.0), InvalidArgument);
  CHECK_THROWS_AS(IPM::poisson_counting(-1.0), InvalidArgument);
  CHECK_THROWS_AS(IPM::compound_poisson_increasing(1.0, JumpLaw::normal(1.0, 1.0)), InvalidArgument);
  CHECK_THROWS_AS(IPM::compound_poisson_increasing(1.0, JumpLaw::uniform(-0.5, 1.0)), InvalidArgument);
  CHECK_THROWS_AS(IPM::path_qv(PathModel::finite_variation({{0, 0}, {1, 1}})), UnsupportedModel);
  IPM bogus;
  bogus.kind = static_cast<IPM::Kind>(42);
  bogus.rate = 1.0;
  CHECK_THROWS_AS(compensator_rate(bogus), UnsupportedModel);
  CHECK_THROWS_AS(compensator_closed_form(bogus), UnsupportedModel);
  CHECK_THROWS_AS(PredictableSpec::left_limit_function(make_function("cos"), 0.0), InvalidArgument);
}

TEST_CASE("increasing_process paths") {
  const auto cp = IPM::compound_poisson_increasing(2.0, kUnit);
  std::vector<double> terminal;
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    const auto p = simulate(cp.underlying(), 64, 1.0, derive_seed(21, seed));
    const auto a = increasing_process(cp, p);
    REQUIRE(a.front() == 0.0);
    for (std::size_t k = 1; k < a.size(); ++k) REQUIRE(a[k] >= a[k - 1]);
    terminal.push_back(a.back());
  }
  // E[A_1] = 2 * 0.5, Var = 2 * E[J^2] = 2/3
  const auto s = sample_stats(terminal);
  CHECK(std::abs(s.mean - 1.0) <= 3 * std::sqrt(2.0 / 3.0 / 4000));

  // PathQV: realized bracket equals the sum of squared pieces
  const auto jd = PathModel::jump_diffusion(1.0, 0.0, 5.0, JumpLaw::normal(0.0, 1.0));
  const auto p = simulate(jd, 512, 1.0, 3);
  const auto a = increasing_process(IPM::path_qv(jd), p);
  double qv = 0;
  for (std::size_t k = 1; k < p.size(); ++k) {
    const double d = p.pre_value(k) - p.value(k - 1);
    qv += d * d + p.jump_sizes()[k] * p.jump_sizes()[k];
  }
  CHECK(a.back() == doctest::Approx(qv).epsilon(1e-12));

  // counting process: A counts the jumps
  const auto n = IPM::poisson_counting(4.0);
  const auto pn = simulate(n.underlying(), 128, 1.0, 5);
  CHECK(increasing_process(n, pn).back() == double(pn.jumps().size()));
}

TEST_CASE("verify_compensator examples") {
  SUBCASE("Y = 1, Poisson(3)") {
    auto o = fast();
    const auto v = verify_compensator(IPM::poisson_counting(3.0), PredictableSpec::constant(1.0), 10000, o);
    CHECK(v.mean_y_dap == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(std::abs(v.mean_y_da - 3.0) <= 3 * std::sqrt(3.0 / 10000));
    CHECK(v.pass());
  }
  SUBCASE("Y = 1{t <= 0.5}, compound Poisson(2, U(0,1))") {
    const auto v = verify_compensator(IPM::compound_poisson_increasing(2.0, kUnit),
                                      PredictableSpec::indicator_before(0.5), 10000, fast());
    CHECK(v.mean_y_dap == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(v.mean_y_da - 0.5) <= 3 * v.se_y_da);
    CHECK(v.pass());
  }
  SUBCASE("Y = 0") {
    const auto v = verify_compensator(IPM::path_qv(PathModel::brownian(1.0)),
                                      PredictableSpec::constant(0.0), 100, fast());
    CHECK(v.mean_y_da == 0.0);
    CHECK(v.mean_y_dap == 0.0);
    CHECK(v.difference == 0.0);
    CHECK(v.pass());
  }
  SUBCASE("indicator past the horizon integrates everything") {
    const auto v = verify_compensator(IPM::poisson_counting(2.0), PredictableSpec::indicator_before(5.0),
                                      500, fast());
    const auto w = verify_compensator(IPM::poisson_counting(2.0), PredictableSpec::constant(1.0), 500, fast());
    CHECK(v.mean_y_da == w.mean_y_da);
    CHECK(v.mean_y_dap == w.mean_y_dap);
  }
}

TEST_CASE("verify_compensator over model and integrand pairs") {
  const std::vector<IPM> models{
      IPM::poisson_counting(3.0), IPM::compound_poisson_increasing(2.0, kUnit),
      IPM::path_qv(PathModel::brownian(1.0)),
      IPM::path_qv(PathModel::jump_diffusion(0.8, 0.0, 3.0, JumpLaw::normal(0.1, 0.5))),
      IPM::deterministic(1.5)};
  const std::vector<PredictableSpec> ys{
      PredictableSpec::constant(1.0), PredictableSpec::indicator_before(0.5),
      PredictableSpec::left_limit_function(make_function("cos"), 1.0),
      PredictableSpec::left_limit_function(make_function("tanh"), 1.0)};
  for (const auto& m : models) {
    for (const auto& y : ys) {
      const auto v = verify_compensator(m, y, 2000, fast(31));
      INFO(v.verdict.subject, " diff ", v.difference, " se ", v.combined_se);
      CHECK(v.pass());
      CHECK(v.paired_se <= v.combined_se * 1.5 + 1e-15);
    }
  }
}

TEST_CASE("negative control: wrong intensity fails") {
  auto o = fast();
  o.override_rate = 1.2 * 3.0;
  const auto v = verify_compensator(IPM::poisson_counting(3.0), PredictableSpec::constant(1.0), 10000, o);
  CHECK_FALSE(v.pass());
  CHECK(v.difference == doctest::Approx(-0.6).epsilon(0.1));
}

TEST_CASE("bounded integrand is enforced") {
  const auto y = PredictableSpec::left_limit_function(make_function("square"), 1.0);
  CHECK_THROWS_AS(verify_compensator(IPM::path_qv(PathModel::brownian(1.0, 0.0, 3.0)), y, 10, fast()),
                  InvalidArgument);
}

TEST_CASE("martingale_check") {
  const std::vector<double> cps{0.0, 0.5, 1.0};
  auto o = fast(41);
  const auto ok = martingale_check(IPM::poisson_counting(1.0), 10000, cps, o);
  CHECK(ok.pass());
  REQUIRE(ok.increments.size() == 2);

  const auto det = martingale_check(IPM::deterministic(1.0), 50, cps, o);
  CHECK(det.pass());
  for (const auto& c : det.increments) {
    CHECK(c.mean == 0.0);
    CHECK(c.se == 0.0);
  }

  o.override_rate = 1.5;
  const auto bad = martingale_check(IPM::poisson_counting(1.0), 10000, cps, o);
  CHECK_FALSE(bad.pass());
  // bias (lambda - lambda') (t - s) = -0.25 per half interval
  for (const auto& c : bad.increments) CHECK(c.mean == doctest::Approx(-0.25).epsilon(0.2));

  const std::vector<double> unordered{0.5, 0.2};
  CHECK_THROWS_AS(martingale_check(IPM::poisson_counting(1.0), 10, unordered, fast()), InvalidArgument);
}

TEST_CASE("verify_compensator is deterministic") {
  const auto m = IPM::path_qv(PathModel::jump_diffusion(1.0, 0.0, 2.0, kUnit));
  const auto y = PredictableSpec::left_limit_function(make_function("sin"), 1.0);
  const auto a = verify_compensator(m, y, 300, fast(7));
  const auto b = verify_compensator(m, y, 300, fast(7));
  CHECK(a.mean_y_da == b.mean_y_da);
  CHECK(a.mean_y_dap == b.mean_y_dap);
  CHECK(a.se_y_da == b.se_y_da);
}
