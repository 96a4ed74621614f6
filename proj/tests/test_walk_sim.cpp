#include <cmath>

#include "cbrw/errors.hpp"
#include "cbrw/rng.hpp"
#include "cbrw/walk_sim.hpp"
#include "doctest.h"

using cbrw::PassageMode;
using cbrw::StepLaw;

TEST_SUITE_BEGIN("walk_sim");

TEST_CASE("simulate_path shape and increments") {
  const StepLaw law({{-1, 2.0 / 3.0}, {2, 1.0 / 3.0}});
  cbrw::Rng rng(11);
  const auto path = cbrw::simulate_path(law, 3, 500, rng);
  REQUIRE(path.positions.size() == 501);
  CHECK(path.positions[0] == 3);
  for (std::size_t k = 1; k < path.positions.size(); ++k) {
    const int d = path.positions[k] - path.positions[k - 1];
    CHECK((d == -1 || d == 2));
  }
}

TEST_CASE("local time counts strictly earlier visits") {
  cbrw::WalkPath p;
  p.positions = {0, 1, 0, -1, 0};
  CHECK(p.local_time_at(0, 4) == 2);   // S_0, S_2
  CHECK(p.local_time_at(0, 5) == 3);
  CHECK(p.local_time_at(1, 5) == 1);
  CHECK(p.local_time_at(7, 5) == 0);
}

TEST_CASE("first hit from inside the target set is immediate") {
  const StepLaw law({{-1, 0.5}, {1, 0.5}});
  cbrw::Rng rng(12);
  const auto s = cbrw::first_passage_samples(law, 2, {2}, PassageMode::kFirstHit,
                                             100, 10, rng);
  for (const auto& x : s) {
    CHECK(x.hit);
    CHECK(x.time == 0);
    CHECK_FALSE(x.censored);
  }
}

TEST_CASE("first return of the simple walk matches u_2") {
  const StepLaw law({{-1, 0.5}, {1, 0.5}});
  cbrw::Rng rng(13);
  const int n = 100000;
  const auto s = cbrw::first_passage_samples(law, 0, {0},
                                             PassageMode::kFirstReturn, 64, n,
                                             rng);
  long at2 = 0, censored = 0;
  for (const auto& x : s) {
    if (x.censored) ++censored;
    else if (x.time == 2) ++at2;
    if (x.hit) CHECK(x.time >= 1);
  }
  const double p2 = static_cast<double>(at2) / n;
  CHECK(std::abs(p2 - 0.5) < 5 * std::sqrt(0.25 / n));
  CHECK(censored > 0);  // heavy return-time tail is visible at cap 64
}

TEST_CASE("escape fraction of a drifted walk") {
  const StepLaw law({{-1, 0.25}, {1, 0.75}});
  cbrw::Rng rng(14);
  const int n = 100000;
  const auto s = cbrw::first_passage_samples(law, 0, {0},
                                             PassageMode::kFirstReturn, 2000, n,
                                             rng);
  long miss = 0;
  for (const auto& x : s)
    if (!x.hit) ++miss;
  // Ruin argument: no-return probability is 0.75 (1 - 1/3) = 0.5.
  CHECK(std::abs(static_cast<double>(miss) / n - 0.5) < 0.01);
}

TEST_CASE("descending ruin probability of a +2/-1 walk") {
  const StepLaw law({{-1, 0.5}, {2, 0.5}});
  cbrw::Rng rng(15);
  const int n = 100000;
  const auto s = cbrw::first_passage_samples(law, 1, {0}, PassageMode::kFirstHit,
                                             5000, n, rng);
  long hit = 0;
  for (const auto& x : s)
    if (x.hit) ++hit;
  // zeta = (sqrt 5 - 1)/2 solves zeta = 1/2 + zeta^3 / 2.
  const double zeta = 0.5 * (std::sqrt(5.0) - 1.0);
  CHECK(std::abs(static_cast<double>(hit) / n - zeta) < 0.01);
}

TEST_CASE("argument validation") {
  const StepLaw law({{-1, 0.5}, {1, 0.5}});
  cbrw::Rng rng(16);
  CHECK_THROWS_AS(cbrw::first_passage_samples(law, 0, {}, PassageMode::kFirstHit,
                                              10, 1, rng),
                  cbrw::ValidationError);
  CHECK_THROWS_AS(cbrw::first_passage_samples(law, 0, {0},
                                              PassageMode::kFirstReturn, 0, 1,
                                              rng),
                  cbrw::ValidationError);
  CHECK_THROWS_AS(cbrw::simulate_path(law, 0, -1, rng), cbrw::ValidationError);
}

TEST_SUITE_END();
