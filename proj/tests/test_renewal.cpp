#include <cmath>
#include <vector>

#include "cbrw/errors.hpp"
#include "cbrw/renewal.hpp"
#include "cbrw/step_law.hpp"
#include "doctest.h"

using cbrw::RenewalMode;
using cbrw::solve_renewal;

TEST_SUITE_BEGIN("renewal");

TEST_CASE("unit-increment identity") {
  std::vector<double> y(64, 0.0), s(64, 0.0);
  y[0] = 1.0;
  s[1] = 1.0;
  const auto sol = solve_renewal(y, s, RenewalMode::kProper);
  for (double t : sol.t) CHECK(t == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(sol.limit == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("periodic increments are rejected in proper mode") {
  std::vector<double> y(32, 0.0), s(32, 0.0);
  y[0] = 1.0;
  s[2] = 1.0;
  CHECK_THROWS_AS(solve_renewal(y, s, RenewalMode::kProper),
                  cbrw::PeriodicSequenceError);
}

TEST_CASE("defective mode limit") {
  std::vector<double> y(64, 1.0), s(64, 0.0);
  s[1] = 0.5;
  const auto sol = solve_renewal(y, s, RenewalMode::kDefective);
  CHECK(sol.t[0] == 1.0);
  CHECK(sol.t[1] == doctest::Approx(1.5));
  CHECK(sol.t[63] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sol.limit == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("input validation") {
  std::vector<double> y(8, 0.0), s(8, 0.0);
  y[0] = 1.0;
  s[0] = 0.5;
  CHECK_THROWS_AS(solve_renewal(y, s, RenewalMode::kDefective),
                  cbrw::ValidationError);  // s_0 != 0
  s[0] = 0.0;
  s[1] = -0.25;
  CHECK_THROWS_AS(solve_renewal(y, s, RenewalMode::kDefective),
                  cbrw::ValidationError);
  s[1] = 1.2;
  CHECK_THROWS_AS(solve_renewal(y, s, RenewalMode::kProper),
                  cbrw::ValidationError);  // mass above 1
  s[1] = 0.9;
  CHECK_THROWS_AS(solve_renewal(y, s, RenewalMode::kProper),
                  cbrw::ValidationError);  // not proper
  CHECK_THROWS_AS(solve_renewal(std::vector<double>(4, 0.0), s,
                                RenewalMode::kDefective),
                  cbrw::ValidationError);  // length mismatch
  CHECK_THROWS_AS(solve_renewal({}, {}, RenewalMode::kProper),
                  cbrw::ValidationError);
}

TEST_CASE("discounted-return renewal function of the simple walk") {
  // Sub-sample the period-2 return law m e^{-r k} u_k; the renewal function
  // then converges to d over the mean m E[tau e^{-r tau}], not to d/m.
  const cbrw::StepLaw walk({{-1, 0.5}, {1, 0.5}});
  const double m = 1.83;
  const double t0 = 0.5 * std::log(2.0 * m - 1.0);
  const double r = std::log(m) - t0;
  const auto u = walk.return_time_pmf(400);
  const int n_sub = 200;
  std::vector<double> y(static_cast<std::size_t>(n_sub) + 1, 0.0);
  std::vector<double> s(static_cast<std::size_t>(n_sub) + 1, 0.0);
  y[0] = 1.0;
  for (int j = 1; j <= n_sub; ++j)
    s[static_cast<std::size_t>(j)] =
        m * std::exp(-r * 2.0 * j) * u[static_cast<std::size_t>(2 * j - 1)];
  const auto sol = solve_renewal(y, s, RenewalMode::kProper);
  const double es = std::exp(-2.0 * r);
  const double tau_mean = es / std::sqrt(1.0 - es);  // E[tau e^{-r tau}]
  const double c0 = 2.0 / (m * tau_mean);
  CHECK(sol.limit == doctest::Approx(c0).epsilon(1e-8));
  CHECK(sol.t.back() == doctest::Approx(c0).epsilon(1e-6));
  CHECK(sol.sum_s == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_SUITE_END();
