#include "cbrw/renewal.hpp"

#include <cmath>
#include <numeric>

#include "cbrw/errors.hpp"

namespace cbrw {

RenewalSolution solve_renewal(const std::vector<double>& y,
                              const std::vector<double>& s, RenewalMode mode) {
  if (y.empty() || s.empty())
    throw ValidationError("solve_renewal: empty input sequence");
  if (y.size() != s.size())
    throw ValidationError("solve_renewal: y and s must have equal length");
  if (s[0] != 0.0)
    throw ValidationError("solve_renewal: s_0 must be 0 (increments are >= 1)");
  double sum_s = 0.0, mean_s = 0.0;
  int g = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (!(s[k] >= 0.0))
      throw ValidationError("solve_renewal: s must be nonnegative");
    sum_s += s[k];
    mean_s += static_cast<double>(k) * s[k];
    if (s[k] > 0.0) g = std::gcd(g, static_cast<int>(k));
  }
  if (sum_s > 1.0 + 1e-9)
    throw ValidationError("solve_renewal: sum of s exceeds 1");
  if (mode == RenewalMode::kProper) {
    if (std::abs(sum_s - 1.0) > 1e-6)
      throw ValidationError(
          "solve_renewal: proper mode requires sum s = 1 (truncate further or "
          "use defective mode)");
    if (g != 1)
      throw PeriodicSequenceError(
          "solve_renewal: increment sequence has period " + std::to_string(g) +
          "; sub-sample by the period before taking a pointwise limit");
  } else {
    if (sum_s >= 1.0 - 1e-12)
      throw ValidationError("solve_renewal: defective mode requires sum s < 1");
  }

  RenewalSolution out;
  out.mode = mode;
  out.sum_s = sum_s;
  out.mean_s = mean_s;
  out.t.resize(y.size());
  for (std::size_t n = 0; n < y.size(); ++n) {
    double acc = y[n];
    for (std::size_t k = 1; k <= n; ++k) acc += s[k] * out.t[n - k];
    out.t[n] = acc;
  }
  out.tail_last_y = std::abs(y.back());
  if (mode == RenewalMode::kProper) {
    // t_n -> (sum y) / (sum n s_n).
    double sum_y = 0.0;
    for (double v : y) sum_y += v;
    if (!(mean_s > 0.0))
      throw ValidationError("solve_renewal: degenerate increment mean");
    out.limit = sum_y / mean_s;
  } else {
    out.limit = y.back() / (1.0 - sum_s);
  }
  return out;
}

}  // namespace cbrw
