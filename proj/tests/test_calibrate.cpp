#include <cmath>

#include "cbrw/calibrate.hpp"
#include "cbrw/errors.hpp"
#include "cbrw/rng.hpp"
#include "doctest.h"

using namespace cbrw;

namespace {
StepLaw simple() { return StepLaw({{-1, 0.5}, {1, 0.5}}); }
StepLaw lazy() { return StepLaw({{-1, 0.4}, {0, 0.2}, {1, 0.4}}); }
StepLaw down1up2() { return StepLaw({{-1, 2.0 / 3.0}, {2, 1.0 / 3.0}}); }

double simple_laplace(double r) { return 1.0 - std::sqrt(1.0 - std::exp(-2.0 * r)); }

// First-return transform of the lazy walk through the one-sided passage
// root of f = s (0.4 + 0.2 f + 0.4 f^2).
double lazy_laplace(double r) {
  const double s = std::exp(-r);
  const double disc = (1.0 - 0.2 * s) * (1.0 - 0.2 * s) - 0.64 * s * s;
  const double f = ((1.0 - 0.2 * s) - std::sqrt(disc)) / (0.8 * s);
  return s * (0.2 + 0.8 * f);
}

constexpr double kSimpleM = 1.83;
const double kSimpleT0 = 0.5 * std::log(2.0 * kSimpleM - 1.0);
const double kSimpleR = std::log(kSimpleM) - kSimpleT0;
const double kLazyR = std::log(1.2);   // Poisson(2) catalyst
const double kLazyT0 = std::log(2.0);
}  // namespace

TEST_SUITE_BEGIN("calibrate");

TEST_CASE("laplace_tau against closed forms") {
  for (double r : {0.05, kSimpleR, 0.3}) {
    const auto lap = laplace_tau(simple(), r, 1e-12);
    CHECK(std::abs(lap.value - simple_laplace(r)) < 2e-11);
    CHECK(lap.error_bound <= 1e-12);
  }
  const auto lazy_lap = laplace_tau(lazy(), kLazyR, 1e-12);
  CHECK(lazy_lap.value == doctest::Approx(0.5).epsilon(1e-10));
  // Monotone decreasing in r.
  CHECK(laplace_tau(lazy(), 0.1, 1e-10).value >
        laplace_tau(lazy(), 0.2, 1e-10).value);
  CHECK_THROWS_AS(laplace_tau(simple(), 0.0, 1e-10), ValidationError);
  CHECK_THROWS_AS(laplace_tau(simple(), 0.1, 0.0), ValidationError);
}

TEST_CASE("malthusian rate of the simple walk") {
  Rng rng(31);
  const auto model = single_catalyst_model(simple(), OffspringLaw::poisson(kSimpleM));
  const double r = solve_malthusian(model, rng);
  CHECK(std::abs(r - kSimpleR) < 1e-9);
  CHECK(std::abs(kSimpleM * laplace_tau(simple(), r, 1e-13).value - 1.0) < 1e-8);
}

TEST_CASE("malthusian rate of the lazy walk with Poisson(2)") {
  Rng rng(32);
  const auto model = single_catalyst_model(lazy(), OffspringLaw::poisson(2.0));
  const double r = solve_malthusian(model, rng);
  CHECK(std::abs(r - kLazyR) < 1e-6);
  // Quadratic-oracle residual.
  CHECK(std::abs(2.0 * lazy_laplace(r) - 1.0) < 1e-7);
}

TEST_CASE("malthusian rate exists for a wide-step walk") {
  Rng rng(33);
  const auto model = single_catalyst_model(down1up2(), OffspringLaw::deterministic(3));
  const double r = solve_malthusian(model, rng);
  CHECK(r > 0.0);
  CHECK(std::abs(3.0 * laplace_tau(down1up2(), r, 1e-13).value - 1.0) < 1e-8);
}

TEST_CASE("subcritical models are rejected") {
  Rng rng(34);
  CHECK_THROWS_AS(solve_malthusian(single_catalyst_model(
                      simple(), OffspringLaw::deterministic(1)), rng),
                  SubcriticalModelError);
  // Drifted walk escaping half the time: m = 1.5 gives m (1 - q) = 0.75.
  const StepLaw drift({{-1, 0.25}, {1, 0.75}});
  CHECK_THROWS_AS(solve_malthusian(single_catalyst_model(
                      drift, OffspringLaw::poisson(1.5)), rng),
                  SubcriticalModelError);
}

TEST_CASE("drifted supercritical model solves") {
  Rng rng(35);
  const StepLaw drift({{-1, 0.25}, {1, 0.75}});
  const auto model = single_catalyst_model(drift, OffspringLaw::deterministic(3));
  const double r = solve_malthusian(model, rng);
  CHECK(r > 0.0);
  CHECK(std::abs(3.0 * laplace_tau(drift, r, 1e-13).value - 1.0) < 1e-8);
}

TEST_CASE("tilt rate solves psi(t0) = r") {
  CHECK(std::abs(solve_t0(simple(), kSimpleR) - kSimpleT0) < 1e-9);
  CHECK(std::abs(solve_t0(lazy(), kLazyR) - kLazyT0) < 1e-9);
  const double t0 = solve_t0(down1up2(), 0.25);
  CHECK(std::abs(down1up2().psi(t0) - 0.25) < 1e-9);
  CHECK_THROWS_AS(solve_t0(simple(), -0.1), ValidationError);
}

TEST_CASE("escape probability") {
  Rng rng(36);
  const auto zero = escape_probability(simple(), 1000, 1000, rng);
  CHECK(zero.exact);
  CHECK(zero.value == 0.0);
  const StepLaw drift({{-1, 0.25}, {1, 0.75}});
  const auto esc = escape_probability(drift, 5000, 100000, rng);
  CHECK_FALSE(esc.exact);
  CHECK(std::abs(esc.value - 0.5) < 0.01);
  CHECK(esc.ci_half > 0.0);
}

TEST_CASE("extinction fixed points") {
  CHECK(extinction_fixed_point(OffspringLaw::poisson(2.0), 0.0) ==
        doctest::Approx(0.20318786997998001).epsilon(1e-10));
  CHECK(extinction_fixed_point(OffspringLaw::poisson(2.0), 0.25) ==
        doctest::Approx(0.41718835613418859).epsilon(1e-10));
  CHECK(extinction_fixed_point(OffspringLaw::geometric(0.25), 0.0) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  // No-death laws die out never.
  CHECK(extinction_fixed_point(OffspringLaw::deterministic(2), 0.0) == 0.0);
  CHECK_THROWS_AS(extinction_fixed_point(OffspringLaw::poisson(2.0), 0.5),
                  SubcriticalModelError);
  CHECK_THROWS_AS(extinction_fixed_point(OffspringLaw::poisson(2.0), 1.0),
                  ValidationError);
}

TEST_CASE("phi closed form on symmetric nearest-neighbour walks") {
  const auto phi = PhiFunction::closed_form(kSimpleT0, 0);
  CHECK(phi(0) == 1.0);
  CHECK(phi(1) == doctest::Approx(std::exp(-kSimpleT0)).epsilon(1e-14));
  CHECK(phi(-3) == doctest::Approx(std::exp(-3.0 * kSimpleT0)).epsilon(1e-14));
  // Discounted harmonicity away from the catalyst.
  for (int x = 1; x <= 10; ++x) {
    const double lhs = std::exp(kSimpleR) * phi(x);
    const double rhs = 0.5 * phi(x - 1) + 0.5 * phi(x + 1);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("phi table is discounted-harmonic off the catalyst") {
  const double r = 0.25;
  const StepLaw walk = down1up2();
  const auto phi = PhiFunction::table(walk, r, {0}, {1.0}, 40);
  CHECK(phi(0) == 1.0);
  CHECK(phi(5) > 0.0);
  CHECK(phi(5) < 1.0);
  for (int x : {-8, -3, 2, 7, 15}) {
    double rhs = 0.0;
    for (const auto& [s, p] : walk.steps()) rhs += p * phi(x + s);
    CHECK(std::exp(r) * phi(x) == doctest::Approx(rhs).epsilon(1e-8));
  }
  // The lazy-walk table agrees with the closed form.
  const auto tab = PhiFunction::table(lazy(), kLazyR, {0}, {1.0}, 30);
  for (int x = -20; x <= 20; ++x)
    CHECK(tab(x) ==
          doctest::Approx(std::exp(-kLazyT0 * std::abs(x))).epsilon(1e-8));
}

TEST_CASE("ladder statistics of the tilted lazy walk") {
  Rng rng(37);
  const auto stats = ladder_statistics(lazy().tilt(kLazyT0), 200000, rng);
  CHECK(stats.e_h1 == 1.0);  // nearest-neighbour ascents overshoot never
  CHECK(stats.e_s1 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(stats.e_t1 - 2.0) < 5 * stats.se_t1);
  CHECK(std::abs(stats.wald_residual) < 4 * stats.wald_se);
  CHECK_THROWS_AS(ladder_statistics(simple(), 10, rng), ValidationError);
}

TEST_CASE("ladder statistics of a wide-step tilted walk") {
  // Exact enumeration oracle: forward DP over (time, level <= 0) prefixes.
  Rng rng(38);
  const StepLaw tilted = down1up2().tilt(solve_t0(down1up2(), 0.3));
  const double p_up = tilted.steps().back().second;
  const double p_dn = tilted.steps().front().second;
  // DP over depths below zero, 60 steps; a +2 from depth 0 or 1 ascends.
  double eh = 0.0, et = 0.0, mass = 0.0;
  std::vector<double> cur(121, 0.0);  // index = depth = -position
  cur[0] = 1.0;
  for (int t = 1; t <= 60; ++t) {
    std::vector<double> nxt(121, 0.0);
    double h_now = 0.0, t_mass = 0.0;
    for (int i = 0; i <= 120; ++i) {
      const double w = cur[static_cast<std::size_t>(i)];
      if (w == 0.0) continue;
      if (i >= 2) {
        nxt[static_cast<std::size_t>(i - 2)] += w * p_up;
      } else {
        h_now += w * p_up * static_cast<double>(2 - i);
        t_mass += w * p_up;
      }
      if (i + 1 <= 120) nxt[static_cast<std::size_t>(i + 1)] += w * p_dn;
    }
    eh += h_now;
    et += static_cast<double>(t) * t_mass;
    mass += t_mass;
    cur.swap(nxt);
  }
  eh /= mass;
  et /= mass;
  const auto stats = ladder_statistics(tilted, 300000, rng);
  CHECK(mass > 0.999);  // enumeration nearly exhaustive
  CHECK(std::abs(stats.e_h1 - eh) < 5 * stats.se_h1 + 0.01);
  CHECK(std::abs(stats.e_t1 - et) < 5 * stats.se_t1 + 0.01);
  CHECK(std::abs(stats.wald_residual) < 4 * stats.wald_se + 0.01);
}

TEST_CASE("occupation constants of the simple walk") {
  const auto model = single_catalyst_model(simple(), OffspringLaw::poisson(kSimpleM));
  const auto occ0 = occupation_constant_cx(model, 0, 1e-11);
  CHECK(occ0.reachable);
  CHECK(occ0.residue == 0);
  CHECK(std::abs(occ0.series_value - 2.0 / kSimpleM) < 1e-9);
  const double es = std::exp(-2.0 * kSimpleR);
  const double tau_mean = es / std::sqrt(1.0 - es);
  CHECK(std::abs(occ0.renewal_value - 2.0 / (kSimpleM * tau_mean)) < 1e-8);
  // Site 1: one step up then discounted visits killed at the origin sum to
  // 2m/(2m-1), giving exactly e^{-t0} for the series.
  const auto occ1 = occupation_constant_cx(model, 1, 1e-11);
  CHECK(occ1.residue == 1);
  CHECK(std::abs(occ1.series_value - 2.0 * std::exp(-kSimpleT0)) < 1e-9);
  CHECK(occ1.renewal_value ==
        doctest::Approx(occ0.renewal_value * kSimpleM * std::exp(-kSimpleT0))
            .epsilon(1e-8));
}

TEST_CASE("c_star variants for the lazy model") {
  // E[tau e^{-r tau}] = 7/6 exactly, so the renewal prefactor is 3/7.
  const auto set = c_star_set(0.5, 3.0 / 7.0, 2.0, kLazyT0, 1.0);
  CHECK(set.closed_a == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(set.closed_b == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(set.renewal == doctest::Approx(6.0 / 7.0).epsilon(1e-12));
  CHECK(std::abs(set.series - set.closed_a) < 1e-12);
  CHECK(set.pick(CStarVariant::kClosedB) == set.closed_b);
  CHECK_THROWS_AS(c_star_set(0.5, 0.5, 2.0, kLazyT0, 0.0), ValidationError);
}

TEST_CASE("derived parameter bundle for the lazy model") {
  Rng rng(39);
  const auto model = single_catalyst_model(lazy(), OffspringLaw::poisson(2.0));
  DeriveOptions opts;
  opts.ladder_samples = 100000;
  const auto params = derive_params(model, opts, rng);
  CHECK(params.period == 1);
  CHECK(std::abs(params.r - kLazyR) < 1e-8);
  CHECK(std::abs(params.t0 - kLazyT0) < 1e-8);
  CHECK(std::abs(params.alpha - kLazyR / kLazyT0) < 1e-8);
  CHECK(params.malthus_residual < 1e-8);
  CHECK(params.c0_series == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(params.c0_renewal == doctest::Approx(3.0 / 7.0).epsilon(1e-7));
  CHECK(params.tau_discounted_mean == doctest::Approx(7.0 / 6.0).epsilon(1e-7));
  CHECK(params.extinction_s ==
        doctest::Approx(0.20318786997998001).epsilon(1e-9));
  CHECK(params.q_esc.exact);
  REQUIRE(params.phi != nullptr);
  CHECK(params.phi->is_closed_form());
  CHECK((*params.phi)(3) ==
        doctest::Approx(std::exp(-3.0 * kLazyT0)).epsilon(1e-12));
  REQUIRE(params.ladder.has_value());
  CHECK(params.ladder->e_h1 == 1.0);
  REQUIRE(params.c_star.has_value());
  CHECK(params.c_star->closed_a == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(params.c_star->renewal == doctest::Approx(6.0 / 7.0).epsilon(1e-6));
  const auto lines = params.manifest_lines();
  CHECK(lines.size() > 10);
  bool has_r = false;
  for (const auto& l : lines)
    if (l.rfind("r = ", 0) == 0 && l.find("method=") != std::string::npos)
      has_r = true;
  CHECK(has_r);
}

TEST_CASE("derived parameter bundle for the periodic simple walk") {
  Rng rng(40);
  const auto model = single_catalyst_model(simple(), OffspringLaw::poisson(kSimpleM));
  DeriveOptions opts;
  const auto params = derive_params(model, opts, rng);
  CHECK(params.period == 2);
  CHECK(params.alpha > 0.2353);
  CHECK(params.alpha < 0.2355);
  CHECK(std::abs(params.r + params.t0 - std::log(kSimpleM)) < 1e-9);
  CHECK_FALSE(params.ladder.has_value());
  CHECK_FALSE(params.c_star.has_value());
  CHECK(params.c0_series == doctest::Approx(2.0 / kSimpleM).epsilon(1e-12));
}

TEST_SUITE_END();
