#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cbrw/calibrate.hpp"
#include "cbrw/model.hpp"

namespace cbrw {

class Rng;

struct IdentityCheck {
  double lhs = 0.0;   // population-expectation side
  double rhs = 0.0;   // weighted single-walk side
  double diff = 0.0;  // absolute difference
};

// E[sum_{|u|=n} f(X_u)] vs E[f(S_n) m^{L_{n-1}}], forward scatter vs
// backward gather.  Exact up to roundoff.
IdentityCheck many_to_one_check(const ModelSpec& model, int n,
                                const std::function<double(int)>& f);

struct SeriesCheck {
  std::vector<int> times;
  std::vector<double> mean;
  std::vector<double> se;
  double reference = 0.0;  // the constant the means should hold
};

// Single-walk martingale e^{-rn} phi(S_n) prod m1(S_k), k < n: constant
// mean phi(x0) across times.
SeriesCheck delta_martingale_check(const ModelSpec& model,
                                   const PhiFunction& phi, double r,
                                   const std::vector<int>& times,
                                   long replicas, Rng& rng);

struct CoupledPairState {
  int s1 = 0;
  int s2 = 0;
  bool decoupled = false;
  int n = 0;
};

// One transition of the two-spine process: a coupled pair at catalyst x
// stays coupled with probability m1(x)/m2(x) and moves as one walk;
// otherwise (and once decoupled) the legs move independently.
CoupledPairState coupled_pair_step(const CoupledPairState& state,
                                   const ModelSpec& model, Rng& rng);

struct DecouplingCheck {
  std::vector<double> empirical;  // P(T_de >= k+1), k = 0..k_max
  std::vector<double> exact;      // E[prod_{l<k} m1(S_l)/m2(S_l)] by DP
  std::vector<double> se;
  double mean_s1 = 0.0;           // leg-1 endpoint mean (marginal check)
  double se_s1 = 0.0;
};

DecouplingCheck decoupling_check(const ModelSpec& model, int k_max,
                                 long replicas, Rng& rng);

struct SecondMomentCheck {
  double direct = 0.0;      // mean Lambda_n^2 over population replicas
  double direct_se = 0.0;
  double spine = 0.0;       // e^{-2rn} Q[phi phi x coupled-pair weight]
  double spine_se = 0.0;
  double diff_in_se = 0.0;  // |direct - spine| / combined SE
};

SecondMomentCheck second_moment_check(const ModelSpec& model,
                                      const PhiFunction& phi, double r, int n,
                                      long replicas, std::uint64_t seed,
                                      int threads);

struct MogulskiiProbe {
  std::vector<int> j_list;
  std::vector<double> p_hat;  // P(S stays positive, S_j > a j)
  std::vector<double> se;
  double rate_fit = 0.0;      // slope of -log p against j
  double rate_target = 0.0;   // psi*(a)
  double theta = 0.0;         // tilt used for importance sampling
};

// Stay-positive large-deviation decay versus the rate function, estimated
// by importance sampling under the tilt with mean a.
MogulskiiProbe mogulskii_probe(const StepLaw& walk, double a,
                               const std::vector<int>& j_list, long replicas,
                               Rng& rng);

struct TubeIdentityCheck {
  double lhs_exact = 0.0;  // e^{rk} q(k, n) by stay-positive DP
  double rhs_mc = 0.0;     // e^{-t0 z} x tilted tube probability
  double rhs_se = 0.0;
};

// The tilted overshoot identity: e^{rk} q(k,n) = e^{-t0 z} x the tilted
// probability of staying positive and landing in (an + z, an + z + E],
// E an independent exponential of rate t0 drawn explicitly.
TubeIdentityCheck tube_identity_check(const StepLaw& walk, double r, double t0,
                                      double alpha, int k, int n, double z,
                                      long replicas, Rng& rng);

struct ExceedanceProbe {
  double q = 0.0;      // stay-positive exceedance of one walk
  double p = 0.0;      // 1 - f(1 - q): at least one child line exceeds
  double lower = 0.0;  // f'(1-q) q
  double upper = 0.0;  // m q
  bool bracket_ok = false;
};

ExceedanceProbe exceedance_probe(const ModelSpec& model, double alpha, int k,
                                 int n, double z);

}  // namespace cbrw
