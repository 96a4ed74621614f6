#pragma once

#include <vector>

#include "cbrw/step_law.hpp"

namespace cbrw {

class Rng;

struct WalkPath {
  std::vector<int> positions;  // S_0 .. S_n

  // Number of visits to v among S_0 .. S_{k-1} (k <= length).
  int local_time_at(int v, int k) const;
};

WalkPath simulate_path(const StepLaw& law, int x0, int n, Rng& rng);

enum class PassageMode {
  kFirstHit,     // T: first k >= 0 with S_k in targets (0 if already there)
  kFirstReturn,  // tau: first k >= 1 with S_k in targets
};

struct PassageSample {
  bool hit = false;  // target entered within the cap
  int time = 0;      // hitting time, or the cap when censored
  bool censored = false;
};

// Monte Carlo first-passage draws; censored samples are flagged, never
// dropped.
std::vector<PassageSample> first_passage_samples(const StepLaw& law, int x0,
                                                 const std::vector<int>& targets,
                                                 PassageMode mode, int cap,
                                                 int n_samples, Rng& rng);

}  // namespace cbrw
