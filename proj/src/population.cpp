#include "cbrw/population.hpp"

#include <algorithm>
#include <cmath>

#include "cbrw/errors.hpp"
#include "cbrw/rng.hpp"

namespace cbrw {

namespace {
constexpr double kWindowBudget = 1e8;  // sites
}

PopulationState::PopulationState(int x0) {
  lo_ = x0;
  counts_.assign(1, 1.0);
  total_ = 1.0;
}

double PopulationState::count_at(int x) const {
  const long i = static_cast<long>(x) - lo_;
  if (i < 0 || i >= static_cast<long>(counts_.size())) return 0.0;
  return counts_[static_cast<std::size_t>(i)];
}

int PopulationState::max_occupied() const {
  for (long i = static_cast<long>(counts_.size()) - 1; i >= 0; --i)
    if (counts_[static_cast<std::size_t>(i)] > 0.0)
      return lo_ + static_cast<int>(i);
  throw ValidationError("max_occupied: population is empty");
}

int PopulationState::min_occupied() const {
  for (std::size_t i = 0; i < counts_.size(); ++i)
    if (counts_[i] > 0.0) return lo_ + static_cast<int>(i);
  throw ValidationError("min_occupied: population is empty");
}

std::vector<std::pair<int, double>> PopulationState::occupied() const {
  std::vector<std::pair<int, double>> out;
  for (std::size_t i = 0; i < counts_.size(); ++i)
    if (counts_[i] > 0.0)
      out.emplace_back(lo_ + static_cast<int>(i), counts_[i]);
  return out;
}

void PopulationState::ensure(int lo, int hi) {
  int cur_hi = lo_ + static_cast<int>(counts_.size()) - 1;
  if (lo >= lo_ && hi <= cur_hi) return;
  const int new_lo = std::min(lo, lo_);
  const int new_hi = std::max(hi, cur_hi);
  const std::size_t width = static_cast<std::size_t>(new_hi - new_lo) + 1;
  if (static_cast<double>(width) > kWindowBudget)
    throw MemoryBudgetError("population window exceeds the site budget");
  std::vector<double> grown(width, 0.0);
  std::copy(counts_.begin(), counts_.end(),
            grown.begin() + (lo_ - new_lo));
  counts_ = std::move(grown);
  lo_ = new_lo;
}

void PopulationState::set_count(int x, double c) {
  ensure(x, x);
  auto& slot = counts_[static_cast<std::size_t>(x - lo_)];
  total_ += c - slot;
  slot = c;
}

void PopulationState::add_count(int x, double c) {
  ensure(x, x);
  counts_[static_cast<std::size_t>(x - lo_)] += c;
  total_ += c;
}

std::vector<double> scatter_counts(double c, const StepLaw& walk, Rng& rng) {
  const auto& steps = walk.steps();
  std::vector<double> out(steps.size(), 0.0);
  double rem = c;
  double ptot = 1.0;
  for (std::size_t i = 0; i + 1 < steps.size() && rem > 0.0; ++i) {
    const double p = std::min(steps[i].second / ptot, 1.0);
    const double b = rng.binomial(rem, p);
    out[i] = b;
    rem -= b;
    ptot -= steps[i].second;
  }
  out.back() += rem;
  return out;
}

StepOutcome step_population(PopulationState& state, const ModelSpec& model,
                            double cap, Rng& rng) {
  StepOutcome outcome;
  if (!(cap > 0.0)) throw ValidationError("step_population: cap must be > 0");
  if (!state.alive()) return outcome;

  // Branch at catalysts.
  for (std::size_t ci = 0; ci < model.catalysts.size(); ++ci) {
    const int c = model.catalysts[ci];
    const double parents = state.count_at(c);
    if (parents <= 0.0) continue;
    const double children = model.offspring[ci].sample_sum(parents, rng);
    outcome.born += children;
    state.set_count(c, children);
  }

  // Thin proportionally once the total overshoots the cap.
  if (state.total() > cap) {
    outcome.capped = true;
    const double ratio = cap / state.total();
    for (const auto& [x, c] : state.occupied()) {
      const double scaled = c * ratio;
      double keep = std::floor(scaled);
      if (rng.uniform() < scaled - keep) keep += 1.0;
      outcome.removed += c - keep;
      state.set_count(x, keep);
    }
  }

  // Every particle steps independently.
  if (!state.alive()) return outcome;
  const auto sites = state.occupied();
  const auto& steps = model.walk.steps();
  for (const auto& [x, c] : sites) state.set_count(x, 0.0);
  for (const auto& [x, c] : sites) {
    const auto split = scatter_counts(c, model.walk, rng);
    for (std::size_t i = 0; i < split.size(); ++i)
      if (split[i] > 0.0) state.add_count(x + steps[i].first, split[i]);
  }
  return outcome;
}

}  // namespace cbrw
