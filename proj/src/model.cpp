#include "cbrw/model.hpp"

#include <algorithm>

#include "cbrw/errors.hpp"

namespace cbrw {

ModelSpec::ModelSpec(StepLaw w, std::vector<int> sites,
                     std::vector<OffspringLaw> laws, int x0)
    : walk(std::move(w)),
      catalysts(std::move(sites)),
      offspring(std::move(laws)),
      initial_position(x0) {
  if (catalysts.empty()) throw ValidationError("model: no catalyst sites");
  if (catalysts.size() != offspring.size())
    throw ValidationError("model: one offspring law per catalyst required");
  std::vector<std::size_t> order(catalysts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return catalysts[a] < catalysts[b]; });
  std::vector<int> cs;
  std::vector<OffspringLaw> ls;
  cs.reserve(catalysts.size());
  ls.reserve(offspring.size());
  for (std::size_t i : order) {
    cs.push_back(catalysts[i]);
    ls.push_back(offspring[i]);
  }
  for (std::size_t i = 1; i < cs.size(); ++i)
    if (cs[i] == cs[i - 1])
      throw ValidationError("model: duplicate catalyst site");
  catalysts = std::move(cs);
  offspring = std::move(ls);
}

bool ModelSpec::is_catalyst(int x) const { return catalyst_index(x) >= 0; }

int ModelSpec::catalyst_index(int x) const {
  const auto it = std::lower_bound(catalysts.begin(), catalysts.end(), x);
  if (it != catalysts.end() && *it == x)
    return static_cast<int>(it - catalysts.begin());
  return -1;
}

double ModelSpec::m1(int x) const {
  const int i = catalyst_index(x);
  return i >= 0 ? offspring[static_cast<std::size_t>(i)].mean() : 1.0;
}

double ModelSpec::m2(int x) const {
  const int i = catalyst_index(x);
  return i >= 0 ? offspring[static_cast<std::size_t>(i)].second_moment() : 1.0;
}

const OffspringLaw& ModelSpec::sole_offspring() const {
  if (!single_catalyst())
    throw ValidationError("model: operation requires a single catalyst");
  return offspring[0];
}

ModelSpec single_catalyst_model(StepLaw walk, OffspringLaw off, int x0) {
  return ModelSpec(std::move(walk), {0}, {std::move(off)}, x0);
}

}  // namespace cbrw
