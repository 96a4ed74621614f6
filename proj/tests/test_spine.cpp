#include <cmath>
#include <functional>
#include <vector>

#include "cbrw/calibrate.hpp"
#include "cbrw/errors.hpp"
#include "cbrw/model.hpp"
#include "cbrw/rng.hpp"
#include "cbrw/spine.hpp"
#include "doctest.h"

using namespace cbrw;

namespace {
StepLaw lazy() { return StepLaw({{-1, 0.4}, {0, 0.2}, {1, 0.4}}); }

ModelSpec lazy_model() {
  return single_catalyst_model(lazy(), OffspringLaw::poisson(2.0));
}

DerivedParams lazy_params() {
  Rng rng(960);
  DeriveOptions opt;
  opt.want_ladder = false;
  return derive_params(lazy_model(), opt, rng);
}
}  // namespace

TEST_SUITE_BEGIN("spine");

TEST_CASE("population mean equals the weighted single walk") {
  const auto model = lazy_model();
  const std::function<double(int)> fs[] = {
      [](int) { return 1.0; },
      [](int x) { return x >= 3 ? 1.0 : 0.0; },
      [](int x) { return std::exp(0.5 * x); },
  };
  for (const auto& f : fs) {
    const auto chk = many_to_one_check(model, 20, f);
    CHECK(chk.diff <= 1e-12 * std::max({1.0, chk.lhs, chk.rhs}));
  }
  const auto one = many_to_one_check(model, 1, fs[0]);
  CHECK(one.lhs == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("discounted harmonic product keeps a flat mean") {
  const auto params = lazy_params();
  const auto model = lazy_model();
  Rng rng(961);
  const auto chk = delta_martingale_check(model, *params.phi, params.r,
                                          {5, 20, 50}, 20000, rng);
  CHECK(chk.reference == doctest::Approx(1.0).epsilon(1e-9));
  // The summand variance grows with the horizon (slower than the mean
  // decays, but visibly), so the error budget is per time.
  const double se_cap[] = {0.02, 0.08, 0.30};
  for (std::size_t i = 0; i < chk.times.size(); ++i) {
    CHECK(std::abs(chk.mean[i] - chk.reference) < 4.0 * chk.se[i]);
    CHECK(chk.se[i] < se_cap[i]);
  }
}

TEST_CASE("flat mean also holds away from the catalyst") {
  const auto params = lazy_params();
  const auto model =
      single_catalyst_model(lazy(), OffspringLaw::poisson(2.0), 3);
  Rng rng(962);
  const auto chk =
      delta_martingale_check(model, *params.phi, params.r, {10, 30}, 20000, rng);
  CHECK(chk.reference == doctest::Approx(0.125).epsilon(1e-9));
  for (std::size_t i = 0; i < chk.times.size(); ++i)
    CHECK(std::abs(chk.mean[i] - chk.reference) < 4.0 * chk.se[i]);
  Rng rng2(963);
  CHECK_THROWS_AS(
      delta_martingale_check(model, *params.phi, params.r, {30, 10}, 10, rng2),
      ValidationError);
}

TEST_CASE("pair stays coupled off catalysts and splits at the kept rate") {
  const auto model = lazy_model();  // m1 = 2, m2 = 6 at the catalyst
  Rng rng(964);
  const auto chk = decoupling_check(model, 8, 40000, rng);
  REQUIRE(chk.exact.size() == 9);
  CHECK(chk.exact[0] == 1.0);
  CHECK(chk.exact[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  for (std::size_t k = 1; k < chk.exact.size(); ++k) {
    CHECK(chk.exact[k] <= chk.exact[k - 1] + 1e-15);
    CHECK(std::abs(chk.empirical[k] - chk.exact[k]) <=
          4.0 * chk.se[k] + 1e-12);
  }
  // Each leg is marginally the plain walk.
  CHECK(std::abs(chk.mean_s1) < 4.0 * chk.se_s1);
}

TEST_CASE("sure doubling splits half the time") {
  const auto model =
      single_catalyst_model(lazy(), OffspringLaw::deterministic(2));
  Rng rng(965);
  const auto chk = decoupling_check(model, 4, 20000, rng);
  CHECK(chk.exact[1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(chk.empirical[1] - 0.5) < 4.0 * chk.se[1]);
}

TEST_CASE("pair moment matches the hand value at one generation") {
  const auto model =
      single_catalyst_model(lazy(), OffspringLaw::deterministic(2));
  const auto params = lazy_params();  // same mean, same rate and phi
  const auto chk =
      second_moment_check(model, *params.phi, params.r, 1, 30000, 9001, 2);
  const double oracle = 19.0 / 18.0;
  CHECK(std::abs(chk.direct - oracle) < 4.0 * chk.direct_se);
  CHECK(std::abs(chk.spine - oracle) < 4.0 * chk.spine_se);
  CHECK(chk.diff_in_se < 4.0);
}

TEST_CASE("pair moment agrees between population and pair at depth") {
  const auto model = lazy_model();
  const auto params = lazy_params();
  const auto chk =
      second_moment_check(model, *params.phi, params.r, 6, 30000, 9002, 2);
  CHECK(chk.direct > 0.0);
  CHECK(chk.spine > 0.0);
  CHECK(chk.diff_in_se < 4.0);
}

TEST_CASE("stay-positive overshoot decays at the rate function") {
  Rng rng(966);
  const StepLaw walk = lazy();
  const double a = 0.45;
  const auto probe = mogulskii_probe(walk, a, {80, 120, 160, 200}, 40000, rng);
  CHECK(probe.theta > 0.0);
  CHECK(probe.rate_target == doctest::Approx(walk.psi_star(a)));
  for (std::size_t i = 1; i < probe.p_hat.size(); ++i)
    CHECK(probe.p_hat[i] < probe.p_hat[i - 1]);
  CHECK(std::abs(probe.rate_fit - probe.rate_target) <
        0.15 * probe.rate_target);
  Rng rng2(967);
  CHECK_THROWS_AS(mogulskii_probe(walk, 0.0, {10}, 100, rng2),
                  ValidationError);
}

TEST_CASE("tilted overshoot identity at two anchor points") {
  const auto params = lazy_params();
  struct Cfg {
    int k;
    int n;
    double z;
    int seed;
  };
  for (const Cfg& c : {Cfg{20, 50, 1.0, 968}, Cfg{0, 40, 0.5, 969}}) {
    Rng rng(static_cast<std::uint64_t>(c.seed));
    const auto chk = tube_identity_check(lazy(), params.r, params.t0,
                                         params.alpha, c.k, c.n, c.z, 200000,
                                         rng);
    CHECK(chk.lhs_exact > 0.0);
    CHECK(chk.rhs_se > 0.0);
    CHECK(std::abs(chk.lhs_exact - chk.rhs_mc) < 4.0 * chk.rhs_se);
  }
  Rng rng(970);
  CHECK_THROWS_AS(
      tube_identity_check(lazy(), 0.18, 0.69, 0.26, 10, 10, 0.0, 10, rng),
      ValidationError);
}

TEST_CASE("child-line exceedance sits in the convexity bracket") {
  const auto params = lazy_params();
  const auto model = lazy_model();
  const auto probe = exceedance_probe(model, params.alpha, 10, 30, 0.0);
  CHECK(probe.q > 0.0);
  CHECK(probe.q < 1.0);
  CHECK(probe.bracket_ok);
  CHECK(probe.lower <= probe.p + 1e-15);
  CHECK(probe.p <= probe.upper + 1e-15);
  const auto further = exceedance_probe(model, params.alpha, 10, 30, 2.0);
  CHECK(further.q < probe.q);
  CHECK(further.bracket_ok);
}

TEST_SUITE_END();
