#include <cmath>

#include "cbrw/errors.hpp"
#include "cbrw/model.hpp"
#include "cbrw/population.hpp"
#include "cbrw/rng.hpp"
#include "doctest.h"

using namespace cbrw;

namespace {
StepLaw simple() { return StepLaw({{-1, 0.5}, {1, 0.5}}); }
StepLaw lazy() { return StepLaw({{-1, 0.4}, {0, 0.2}, {1, 0.4}}); }

bool all_integer(const PopulationState& state) {
  for (const auto& [x, c] : state.occupied())
    if (c != std::floor(c)) return false;
  return true;
}
}  // namespace

TEST_SUITE_BEGIN("population");

TEST_CASE("initial state holds one particle at the start site") {
  PopulationState state(3);
  CHECK(state.total() == 1.0);
  CHECK(state.count_at(3) == 1.0);
  CHECK(state.count_at(2) == 0.0);
  CHECK(state.max_occupied() == 3);
  CHECK(state.min_occupied() == 3);
  CHECK(state.alive());
}

TEST_CASE("window grows on demand in both directions") {
  PopulationState state(0);
  state.set_count(100, 5.0);
  state.add_count(-50, 3.0);
  CHECK(state.total() == 9.0);
  CHECK(state.max_occupied() == 100);
  CHECK(state.min_occupied() == -50);
  const auto occ = state.occupied();
  REQUIRE(occ.size() == 3);
  CHECK(occ.front().first == -50);
  CHECK(occ.back().first == 100);
  CHECK(occ.front().second == 3.0);
}

TEST_CASE("extremes of an empty population are invalid") {
  PopulationState state(0);
  state.set_count(0, 0.0);
  CHECK(!state.alive());
  CHECK(state.occupied().empty());
  CHECK_THROWS_AS(state.max_occupied(), ValidationError);
  CHECK_THROWS_AS(state.min_occupied(), ValidationError);
}

TEST_CASE("scatter splits exactly and matches the step frequencies") {
  Rng rng(901);
  const StepLaw walk = lazy();
  const double c = 1e6;
  const auto split = scatter_counts(c, walk, rng);
  REQUIRE(split.size() == 3);
  double sum = 0.0;
  for (double s : split) {
    CHECK(s == std::floor(s));
    sum += s;
  }
  CHECK(sum == c);
  // 4 sigma around the multinomial means.
  CHECK(std::abs(split[0] - 0.4e6) < 2000.0);
  CHECK(std::abs(split[1] - 0.2e6) < 1700.0);
  CHECK(std::abs(split[2] - 0.4e6) < 2000.0);
}

TEST_CASE("a step away from catalysts conserves particles") {
  Rng rng(902);
  const auto model = single_catalyst_model(simple(), OffspringLaw::poisson(2.0));
  PopulationState state(0);
  state.set_count(0, 0.0);
  state.set_count(40, 1e6);
  const auto out = step_population(state, model, 1e9, rng);
  CHECK(out.born == 0.0);
  CHECK(out.removed == 0.0);
  CHECK(!out.capped);
  CHECK(state.total() == 1e6);
  CHECK(state.min_occupied() == 39);
  CHECK(state.max_occupied() == 41);
  CHECK(all_integer(state));
}

TEST_CASE("branching at the catalyst replaces parents by offspring") {
  Rng rng(903);
  const auto model =
      single_catalyst_model(simple(), OffspringLaw::deterministic(2));
  PopulationState state(0);
  state.set_count(0, 1000.0);
  const auto out = step_population(state, model, 1e9, rng);
  CHECK(out.born == 2000.0);
  CHECK(state.total() == 2000.0);
  // All children stepped off the catalyst.
  CHECK(state.count_at(0) == 0.0);
  CHECK(state.count_at(-1) + state.count_at(1) == 2000.0);
}

TEST_CASE("a sterile catalyst kills the population that sits on it") {
  Rng rng(904);
  const auto model =
      single_catalyst_model(simple(), OffspringLaw::deterministic(0));
  PopulationState state(0);
  state.set_count(0, 50.0);
  const auto out = step_population(state, model, 1e9, rng);
  CHECK(out.born == 0.0);
  CHECK(!state.alive());
  CHECK(state.total() == 0.0);
}

TEST_CASE("cap thins proportionally and reports the removals") {
  Rng rng(905);
  const auto model =
      single_catalyst_model(simple(), OffspringLaw::deterministic(1));
  PopulationState state(0);
  state.set_count(0, 1000.0);
  state.set_count(7, 4000.0);
  const auto out = step_population(state, model, 1000.0, rng);
  CHECK(out.capped);
  CHECK(out.removed + state.total() == 5000.0);
  // Floor-or-round-up per site keeps the total within one of the cap.
  CHECK(state.total() >= 999.0);
  CHECK(state.total() <= 1002.0);
  CHECK(all_integer(state));
  // Thinning is roughly proportional: the bigger site keeps about 4x.
  const double near0 = state.count_at(-1) + state.count_at(0) + state.count_at(1);
  const double near7 = state.count_at(6) + state.count_at(7) + state.count_at(8);
  CHECK(near7 > 2.5 * near0);
  CHECK(near0 + near7 == state.total());
}

TEST_CASE("stepping an extinct population is a no-op") {
  Rng rng(906);
  const auto model = single_catalyst_model(simple(), OffspringLaw::poisson(2.0));
  PopulationState state(0);
  state.set_count(0, 0.0);
  const auto out = step_population(state, model, 100.0, rng);
  CHECK(out.born == 0.0);
  CHECK(!out.capped);
  CHECK(!state.alive());
}

TEST_CASE("invalid cap is rejected") {
  Rng rng(907);
  const auto model = single_catalyst_model(simple(), OffspringLaw::poisson(2.0));
  PopulationState state(0);
  CHECK_THROWS_AS(step_population(state, model, 0.0, rng), ValidationError);
}

TEST_CASE("evolution is a pure function of the stream") {
  const auto model = single_catalyst_model(lazy(), OffspringLaw::poisson(2.0));
  auto run = [&] {
    Rng rng(908, 5);
    PopulationState state(0);
    for (int gen = 0; gen < 40; ++gen) step_population(state, model, 1e6, rng);
    return state.occupied();
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == b[i].first);
    CHECK(a[i].second == b[i].second);
  }
}

TEST_SUITE_END();
