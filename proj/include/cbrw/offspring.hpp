#pragma once

#include <string>
#include <vector>

namespace cbrw {

class Rng;

enum class OffspringKind {
  kDeterministic,  // N = c
  kPoisson,        // mean mu
  kBinomial,       // (n, p)
  kGeometric,      // P(N = j) = p (1-p)^j, j >= 0
  kEmpirical,      // finite pmf on {0, 1, ...}
};

// Offspring count distribution at a catalyst.  Construction checks that the
// analytic mean matches a finite-difference derivative of the pgf at 1
// within 1e-8 relative, and that pgf(1) = 1.
class OffspringLaw {
 public:
  static OffspringLaw deterministic(long count);
  static OffspringLaw poisson(double mean);
  static OffspringLaw binomial(long n, double p);
  static OffspringLaw geometric(double p);
  static OffspringLaw empirical(std::vector<double> pmf);

  OffspringKind kind() const { return kind_; }
  double mean() const { return mean_; }           // m1
  double second_moment() const { return m2_; }    // E[N^2]

  // Probability generating function E[x^N] on [0, 1].
  double pgf(double x) const;
  // d/dx E[x^N], closed form per kind.
  double pgf_prime(double x) const;

  double sample(Rng& rng) const;
  // Sum of k independent copies, by the law's closed form.  k is an
  // integer-valued double; above 2^49 the quota path is used.
  double sample_sum(double k, Rng& rng) const;

  std::string describe() const;
  const std::vector<double>& params() const { return params_; }

 private:
  OffspringLaw(OffspringKind kind, std::vector<double> params);

  OffspringKind kind_;
  std::vector<double> params_;
  std::vector<double> cum_;  // empirical only
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace cbrw
