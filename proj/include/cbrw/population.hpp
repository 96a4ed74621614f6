#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "cbrw/model.hpp"

namespace cbrw {

class Rng;

// Site-aggregated particle counts on a dense integer window.  Counts are
// integer-valued doubles; totals past 2^53 lose exactness in the samplers
// but stay conserved in expectation.
class PopulationState {
 public:
  explicit PopulationState(int x0);

  double total() const { return total_; }
  double count_at(int x) const;
  bool alive() const { return total_ > 0.0; }

  // Rightmost and leftmost occupied sites; calling either on an empty
  // population is invalid.
  int max_occupied() const;
  int min_occupied() const;

  std::vector<std::pair<int, double>> occupied() const;

  // Overwrites the count at one site, growing the window as needed.
  void set_count(int x, double c);
  void add_count(int x, double c);

 private:
  friend struct PopulationOps;
  void ensure(int lo, int hi);
  std::vector<double> counts_;
  int lo_ = 0;
  double total_ = 0.0;
};

struct StepOutcome {
  double born = 0.0;      // offspring produced at catalysts this generation
  double removed = 0.0;   // particles dropped by the population cap
  bool capped = false;
};

// One generation: particles at catalyst sites are replaced by offspring,
// then every particle makes an independent walk step.  When the total
// after branching exceeds cap, sites are thinned proportionally with
// integer counts conserved up to one particle per site.
StepOutcome step_population(PopulationState& state, const ModelSpec& model,
                            double cap, Rng& rng);

// Splits c particles across the step distribution (counts sum to c).
std::vector<double> scatter_counts(double c, const StepLaw& walk, Rng& rng);

}  // namespace cbrw
