#include "cbrw/step_law.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cbrw/errors.hpp"
#include "cbrw/rng.hpp"

namespace cbrw {

namespace {
constexpr double kSumTol = 1e-12;
constexpr double kRootTol = 1e-12;
constexpr int kRootCap = 200;
// Entry budget for dense DP buffers (2 buffers of this many doubles ~ 1.6 GB
// would be far past any sane use; error out before allocating).
constexpr std::size_t kDpEntryBudget = 100000000;
}  // namespace

StepLaw::StepLaw(std::vector<std::pair<int, double>> steps)
    : steps_(std::move(steps)) {
  if (steps_.empty()) throw ValidationError("step law: empty support");
  std::sort(steps_.begin(), steps_.end());
  double sum = 0.0;
  int g = 0;
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const auto& [s, p] = steps_[i];
    if (i > 0 && s == steps_[i - 1].first)
      throw ValidationError("step law: duplicate displacement");
    if (!(p > 0.0 && p <= 1.0))
      throw ValidationError("step law: probabilities must lie in (0, 1]");
    sum += p;
    g = std::gcd(g, std::abs(s));
    mean_ += p * s;
  }
  if (std::abs(sum - 1.0) > kSumTol)
    throw ValidationError("step law: probabilities must sum to 1");
  min_step_ = steps_.front().first;
  max_step_ = steps_.back().first;
  if (min_step_ >= 0 || max_step_ <= 0)
    throw ValidationError(
        "step law: support must include negative and positive displacements");
  if (g != 1)
    throw ValidationError("step law: displacement gcd must be 1");
  cum_.reserve(steps_.size());
  double c = 0.0;
  for (const auto& [s, p] : steps_) {
    c += p;
    cum_.push_back(c);
  }
  cum_.back() = 1.0;
}

double StepLaw::psi(double t) const {
  // Shift by the max exponent so e^{t s} cannot overflow.
  double mx = -HUGE_VAL;
  for (const auto& [s, p] : steps_) mx = std::max(mx, t * s);
  double acc = 0.0;
  for (const auto& [s, p] : steps_) acc += p * std::exp(t * s - mx);
  return mx + std::log(acc);
}

double StepLaw::psi_prime(double t) const {
  double mx = -HUGE_VAL;
  for (const auto& [s, p] : steps_) mx = std::max(mx, t * s);
  double num = 0.0, den = 0.0;
  for (const auto& [s, p] : steps_) {
    const double w = p * std::exp(t * s - mx);
    num += s * w;
    den += w;
  }
  return num / den;
}

double StepLaw::psi_star(double a) const {
  const double mean0 = psi_prime(0.0);
  const double feas_tol = 1e-12 * std::max(1.0, std::abs(a));
  if (a > max_step_ + feas_tol)
    throw InfeasibleRateError("psi_star: a exceeds the maximal displacement");
  if (a < mean0 - feas_tol)
    throw OutOfBranchError("psi_star: a below psi'(0); only the increasing "
                           "branch is implemented");
  if (a >= max_step_ - feas_tol) {
    // sup_t (a t - psi(t)) -> -log P(S1 = max step) as t -> infinity.
    return -std::log(steps_.back().second);
  }
  if (a <= mean0 + feas_tol) return -psi(0.0);  // sup attained at t = 0
  double lo = 0.0, hi = 1.0;
  while (psi_prime(hi) < a) {
    hi *= 2.0;
    if (hi > 0x1p40)
      throw ConvergenceError("psi_star: bracket expansion failed");
  }
  for (int it = 0; it < kRootCap && hi - lo > kRootTol; ++it) {
    const double mid = 0.5 * (lo + hi);
    (psi_prime(mid) < a ? lo : hi) = mid;
  }
  const double t = 0.5 * (lo + hi);
  return a * t - psi(t);
}

StepLaw StepLaw::tilt(double theta) const {
  const double z = psi(theta);
  std::vector<std::pair<int, double>> out;
  out.reserve(steps_.size());
  for (const auto& [s, p] : steps_)
    out.emplace_back(s, p * std::exp(theta * s - z));
  return StepLaw(std::move(out));
}

std::vector<double> StepLaw::return_time_pmf(int n_max) const {
  if (n_max < 1) throw ValidationError("return_time_pmf: n_max must be >= 1");
  const int span_lo = n_max * min_step_;
  const int span_hi = n_max * max_step_;
  const std::size_t width = static_cast<std::size_t>(span_hi - span_lo) + 1;
  if (width > kDpEntryBudget)
    throw MemoryBudgetError("return_time_pmf: DP window of " +
                            std::to_string(width) + " entries exceeds budget");
  // alive[x - span_lo] = P(no return through step k, S_k = x).
  std::vector<double> alive(width, 0.0), next(width, 0.0);
  alive[static_cast<std::size_t>(-span_lo)] = 1.0;
  std::vector<double> u(static_cast<std::size_t>(n_max) + 1, 0.0);
  int lo = 0, hi = 0;  // occupied positions
  for (int k = 1; k <= n_max; ++k) {
    const int nlo = std::max(lo + min_step_, span_lo);
    const int nhi = std::min(hi + max_step_, span_hi);
    for (int x = nlo; x <= nhi; ++x) next[static_cast<std::size_t>(x - span_lo)] = 0.0;
    for (int x = lo; x <= hi; ++x) {
      const double mass = alive[static_cast<std::size_t>(x - span_lo)];
      if (mass == 0.0) continue;
      for (const auto& [s, p] : steps_) {
        const int y = x + s;
        if (y < span_lo || y > span_hi) continue;
        next[static_cast<std::size_t>(y - span_lo)] += mass * p;
      }
    }
    u[static_cast<std::size_t>(k)] = next[static_cast<std::size_t>(-span_lo)];
    next[static_cast<std::size_t>(-span_lo)] = 0.0;
    alive.swap(next);
    lo = nlo;
    hi = nhi;
  }
  u.erase(u.begin());  // drop the k = 0 slot
  return u;
}

int StepLaw::period() const {
  // gcd of observed return times; doubling the probe horizon must leave the
  // gcd unchanged twice in a row before it is trusted.
  int probe = 64;
  int stable = 0;
  int last = 0;
  for (;;) {
    const std::vector<double> u = return_time_pmf(probe);
    int g = 0;
    for (std::size_t i = 0; i < u.size(); ++i)
      if (u[i] > 0.0) g = std::gcd(g, static_cast<int>(i) + 1);
    if (g == 0)
      throw ConvergenceError("period: no return path found within probe");
    if (g == last) {
      if (++stable >= 2) return g;
    } else {
      stable = 0;
      last = g;
    }
    probe *= 2;
    if (probe > 1 << 14)
      throw ConvergenceError("period: probe horizon did not stabilize");
  }
}

int StepLaw::sample(Rng& rng) const {
  return steps_[static_cast<std::size_t>(rng.categorical(cum_))].first;
}

}  // namespace cbrw
