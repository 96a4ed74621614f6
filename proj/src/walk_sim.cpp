#include "cbrw/walk_sim.hpp"

#include <algorithm>

#include "cbrw/errors.hpp"
#include "cbrw/rng.hpp"

namespace cbrw {

int WalkPath::local_time_at(int v, int k) const {
  const int upto = std::min<int>(k, static_cast<int>(positions.size()));
  int count = 0;
  for (int i = 0; i < upto; ++i)
    if (positions[static_cast<std::size_t>(i)] == v) ++count;
  return count;
}

WalkPath simulate_path(const StepLaw& law, int x0, int n, Rng& rng) {
  if (n < 0) throw ValidationError("simulate_path: n must be >= 0");
  WalkPath path;
  path.positions.resize(static_cast<std::size_t>(n) + 1);
  int x = x0;
  path.positions[0] = x;
  for (int k = 1; k <= n; ++k) {
    x += law.sample(rng);
    path.positions[static_cast<std::size_t>(k)] = x;
  }
  return path;
}

std::vector<PassageSample> first_passage_samples(const StepLaw& law, int x0,
                                                 const std::vector<int>& targets,
                                                 PassageMode mode, int cap,
                                                 int n_samples, Rng& rng) {
  if (targets.empty())
    throw ValidationError("first_passage_samples: empty target set");
  if (cap < 1) throw ValidationError("first_passage_samples: cap must be >= 1");
  std::vector<int> sorted = targets;
  std::sort(sorted.begin(), sorted.end());
  const auto in_targets = [&](int x) {
    return std::binary_search(sorted.begin(), sorted.end(), x);
  };
  std::vector<PassageSample> out;
  out.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    PassageSample s;
    if (mode == PassageMode::kFirstHit && in_targets(x0)) {
      s.hit = true;
      s.time = 0;
      out.push_back(s);
      continue;
    }
    int x = x0;
    s.time = cap;
    s.censored = true;
    for (int k = 1; k <= cap; ++k) {
      x += law.sample(rng);
      if (in_targets(x)) {
        s.hit = true;
        s.time = k;
        s.censored = false;
        break;
      }
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace cbrw
