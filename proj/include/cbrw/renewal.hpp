#pragma once

#include <vector>

namespace cbrw {

enum class RenewalMode {
  kProper,     // sum s_n = 1; limit by the discrete renewal theorem
  kDefective,  // sum s_n < 1; limit y_inf / (1 - sum s)
};

struct RenewalSolution {
  std::vector<double> t;      // t_0 .. t_{n_max}
  double limit = 0.0;         // estimated pointwise limit
  double sum_s = 0.0;
  double mean_s = 0.0;        // sum n s_n (proper mode)
  double tail_last_y = 0.0;   // |y| at the horizon, truncation diagnostic
  RenewalMode mode = RenewalMode::kProper;
};

// Solve t_n = y_n + sum_{k=1}^{n} s_k t_{n-k} by forward substitution;
// t_0 = y_0.  s_0 must be 0 and s must be nonnegative.  In proper mode the
// increment gcd must be 1 (PeriodicSequenceError otherwise; sub-sample by
// the period first).  In defective mode y is assumed convergent and the
// limit uses its last value.
RenewalSolution solve_renewal(const std::vector<double>& y,
                              const std::vector<double>& s, RenewalMode mode);

}  // namespace cbrw
