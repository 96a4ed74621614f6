#pragma once

#include <utility>
#include <vector>

namespace cbrw {

class Rng;

// Finite-support step distribution of an irreducible lattice walk on Z.
// Construction enforces: distinct displacements, probabilities in (0, 1]
// summing to 1 within 1e-12, support reaching both sides of 0, and
// gcd of |displacements| equal to 1.
class StepLaw {
 public:
  explicit StepLaw(std::vector<std::pair<int, double>> steps);

  const std::vector<std::pair<int, double>>& steps() const { return steps_; }
  int min_step() const { return min_step_; }
  int max_step() const { return max_step_; }
  double mean() const { return mean_; }

  // Log moment generating function log E[e^{t S1}]; finite for all t.
  double psi(double t) const;

  // d/dt psi; strictly increasing from mean() to max_step().
  double psi_prime(double t) const;

  // Legendre transform sup_t (a t - psi(t)) on the increasing branch.
  // Requires psi'(0) <= a <= max_step; throws OutOfBranchError below,
  // InfeasibleRateError above.
  double psi_star(double a) const;

  // Exponentially tilted law p_i e^{theta s_i - psi(theta)}.
  StepLaw tilt(double theta) const;

  // Walk period: gcd of return times with positive probability.
  int period() const;

  // u_k = P(first return to start = k), k = 1..n_max, by exact DP.
  std::vector<double> return_time_pmf(int n_max) const;

  // One displacement draw.
  int sample(Rng& rng) const;

  const std::vector<double>& cum_probs() const { return cum_; }

 private:
  std::vector<std::pair<int, double>> steps_;
  std::vector<double> cum_;
  int min_step_ = 0;
  int max_step_ = 0;
  double mean_ = 0.0;
};

}  // namespace cbrw
