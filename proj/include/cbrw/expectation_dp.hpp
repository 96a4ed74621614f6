#pragma once

#include <functional>
#include <vector>

#include "cbrw/calibrate.hpp"
#include "cbrw/model.hpp"

namespace cbrw {

// Exact per-site expectations E[eta_k(x)], all generations 0..n_max, on the
// full reachable window (no truncation).  Values grow like e^{r k}.
class ExpectationTable {
 public:
  ExpectationTable(const ModelSpec& model, int n_max);

  int n_max() const { return n_max_; }
  double at(int k, int x) const;
  double total(int k) const;
  // Sum of expectations at sites >= x_from (exceedance intensity).
  double tail_sum(int k, int x_from) const;
  // sum_x E[eta_k(x)] f(x)
  double weighted(int k, const std::function<double(int)>& f) const;
  // e^{-r k} sum_x phi(x) E[eta_k(x)]: the martingale mean, exactly 1.
  double martingale_mean(int k, const PhiFunction& phi, double r) const;

 private:
  int n_max_ = 0;
  int lo_ = 0;
  std::vector<std::vector<double>> rows_;
};

// E_x0[f(S_n) m^{L_{n-1}}] by the backward (gather) recursion
// g_j(x) = mult(x) sum_y p(x, y) g_{j-1}(y), independent of the forward
// population recursion it is checked against.
double weighted_walk_expectation(const ModelSpec& model, int n,
                                 const std::function<double(int)>& f);

struct ProfileFit {
  double slope = 0.0;      // of log(e^{-rn} v_n(x)) against |x|
  double intercept = 0.0;
  double rms_residual = 0.0;
  int points = 0;
};

// Least-squares slope of the stationary occupation profile over
// abs_min <= |x| <= abs_max, sites matched to the reachable residue.
ProfileFit occupation_profile_fit(const ExpectationTable& table,
                                  const ModelSpec& model, double r, int n,
                                  int abs_min, int abs_max);

}  // namespace cbrw
