#pragma once

#include <optional>
#include <vector>

#include "cbrw/offspring.hpp"
#include "cbrw/step_law.hpp"

namespace cbrw {

// Branching random walk with branching confined to a finite catalyst set.
// Particles at a catalyst site are replaced by an offspring-law count of
// children, each displaced independently by the step law; particles
// elsewhere just move.
struct ModelSpec {
  StepLaw walk;
  std::vector<int> catalysts;            // sorted, distinct
  std::vector<OffspringLaw> offspring;   // parallel to catalysts
  int initial_position = 0;

  ModelSpec(StepLaw w, std::vector<int> sites, std::vector<OffspringLaw> laws,
            int x0 = 0);

  bool is_catalyst(int x) const;
  // Index into catalysts/offspring, or -1.
  int catalyst_index(int x) const;
  // Mean offspring at x (1 off the catalyst set).
  double m1(int x) const;
  // Second moment at x (1 off the catalyst set).
  double m2(int x) const;

  bool single_catalyst() const { return catalysts.size() == 1; }
  // Offspring law of the unique catalyst; throws if there are several.
  const OffspringLaw& sole_offspring() const;
};

// Convenience: single catalyst at the origin.
ModelSpec single_catalyst_model(StepLaw walk, OffspringLaw offspring,
                                int x0 = 0);

}  // namespace cbrw
