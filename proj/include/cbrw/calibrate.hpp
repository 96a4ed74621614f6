#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cbrw/model.hpp"

namespace cbrw {

class Rng;

// How a derived number was obtained, with an error statement that matches
// the method: deterministic bound for closed forms and DP truncations, a
// confidence half-width for Monte Carlo.
struct MethodTag {
  std::string method;        // "closed-form" | "dp" | "mc"
  double error_bound = 0.0;  // deterministic bound or 95% CI half-width
};

struct TaggedValue {
  double value = 0.0;
  MethodTag tag;
};

// Discounted first-return transform E[e^{-r tau}] with the truncation bound
// actually achieved.
struct LaplaceTau {
  double value = 0.0;
  double error_bound = 0.0;
  int horizon = 0;  // DP steps used
};

LaplaceTau laplace_tau(const StepLaw& walk, double r, double precision,
                       int horizon_cap = 2000000);

// First-hit transform phi(x) = E_x[e^{-r T(catalyst)}], normalized to the
// catalyst boundary values.  Closed form e^{-t0 |x - c|} applies to
// symmetric nearest-neighbour-support walks; otherwise a discounted value
// iteration on a window wide enough that boundary leakage is below 1e-10.
class PhiFunction {
 public:
  // Single catalyst site c with boundary value 1.
  static PhiFunction closed_form(double t0, int c);
  static PhiFunction table(const StepLaw& walk, double r,
                           const std::vector<int>& sites,
                           const std::vector<double>& boundary, int x_max);

  double operator()(int x) const;
  bool is_closed_form() const { return closed_form_; }
  double error_bound() const { return error_bound_; }
  int x_max() const { return x_max_; }

 private:
  PhiFunction() = default;
  bool closed_form_ = false;
  double t0_ = 0.0;
  int center_ = 0;
  int offset_ = 0;  // table index of x = offset_ + index origin
  std::vector<double> values_;
  double error_bound_ = 0.0;
  int x_max_ = 0;
};

struct EscapeProbability {
  double value = 0.0;      // zero-mean: exact 0; else MC upper-bound proxy
  double ci_half = 0.0;
  bool exact = false;
  int cap = 0;
};

EscapeProbability escape_probability(const StepLaw& walk, int cap,
                                     int n_samples, Rng& rng);

// Smallest fixed point of x = f(q + x (1 - q)) on [0, 1).  Requires
// supercriticality m (1 - q) > 1.
double extinction_fixed_point(const OffspringLaw& off, double q_esc);

// Malthusian rate: the r > 0 with m E[e^{-r tau}] = 1 (single catalyst).
double solve_malthusian(const ModelSpec& model, Rng& rng);

// Tilt rate: psi(t0) = r on the increasing branch.
double solve_t0(const StepLaw& walk, double r);

struct LadderStatistics {
  double e_h1 = 0.0, se_h1 = 0.0;   // first strict ascent overshoot
  double e_t1 = 0.0, se_t1 = 0.0;   // first strict ascent epoch
  double e_s1 = 0.0;                // exact one-step mean of the tilted walk
  double wald_residual = 0.0;       // mean of H - E[S1] T, zero in law
  double wald_se = 0.0;
  long resamples = 0;               // cap-doubling events (logged, not dropped)
};

// Strict ascending ladder variables of a positive-drift walk, by simulation.
LadderStatistics ladder_statistics(const StepLaw& walk, int n_samples,
                                   Rng& rng);

// Occupation prefactor at site x: both readings of the discounted-return
// series are produced.  series_value integrates the series as printed
// (equals d/m at x = 0); renewal_value divides by the mean of the
// discounted return law, which is the value the expectation DP actually
// converges to.
struct OccupationConstant {
  double series_value = 0.0;
  double renewal_value = 0.0;
  double tail_bound = 0.0;
  int residue = -1;      // l_x: k mod d with mass at x, -1 if unreachable
  bool reachable = true;
};

OccupationConstant occupation_constant_cx(const ModelSpec& model, int x,
                                          double precision);

enum class CStarVariant { kSeries, kClosedA, kClosedB, kRenewal };

struct CStarSet {
  double series = 0.0;    // c0_series * m * sum_j e^{-t0 j}(1 - e^{-t0}) j / E[H1]
  double closed_a = 0.0;  // c0_series * m * e^{-t0} / ((1 - e^{-t0}) E[H1])
  double closed_b = 0.0;  // same with e^{-2 t0}
  double renewal = 0.0;   // closed_a scaled to the renewal-limit c0
  double pick(CStarVariant v) const;
};

// Full calibration bundle for a single-catalyst model.
struct DerivedParams {
  double r = 0.0;
  double t0 = 0.0;
  double alpha = 0.0;       // r / t0
  double m = 0.0;
  int period = 1;
  double laplace_value = 0.0;       // E[e^{-r tau}] = 1/m up to residual
  double malthus_residual = 0.0;    // |m E[e^{-r tau}] - 1|
  double tau_discounted_mean = 0.0; // E[tau e^{-r tau}]
  double c0_series = 0.0;           // d/m
  double c0_renewal = 0.0;          // d/(m E[tau e^{-r tau}])
  EscapeProbability q_esc;
  double extinction_s = 0.0;
  double survival = 0.0;            // 1 - s
  std::shared_ptr<PhiFunction> phi;
  std::optional<LadderStatistics> ladder;  // aperiodic models only
  std::optional<CStarSet> c_star;
  std::map<std::string, MethodTag> tags;

  // Flat manifest lines "key = value | method=... | error=...".
  std::vector<std::string> manifest_lines() const;
};

struct DeriveOptions {
  double precision = 1e-11;
  int escape_cap = 10000;
  int escape_samples = 200000;
  int ladder_samples = 400000;
  int phi_x_max = 64;
  bool want_ladder = true;
};

DerivedParams derive_params(const ModelSpec& model, const DeriveOptions& opts,
                            Rng& rng);

CStarSet c_star_set(double c0_series, double c0_renewal, double m, double t0,
                    double e_h1);

}  // namespace cbrw
