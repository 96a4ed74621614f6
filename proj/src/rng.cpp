#include "cbrw/rng.hpp"

#include <cmath>
#include <cstring>

#include "cbrw/errors.hpp"

namespace cbrw {
namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Below this cap a count fits binomial/poisson splitting without losing
// integer exactness (intermediate sums stay under 2^53).
constexpr double kExactCap = 562949953421312.0;  // 2^49

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t st = seed ^ (0x6a09e667f3bcc909ULL * (stream + 1));
  for (auto& w : s_) w = splitmix64(st);
  // All-zero state is invalid for xoshiro; splitmix cannot produce four
  // zero words from distinct counters, but guard anyway.
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform_pos() {
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_below(std::uint64_t n) {
  // Lemire rejection; unbiased.
  if (n == 0) throw ValidationError("uniform_below: n must be >= 1");
  std::uint64_t x = next_u64();
  __uint128_t mted = static_cast<__uint128_t>(x) * n;
  std::uint64_t lo = static_cast<std::uint64_t>(mted);
  if (lo < n) {
    std::uint64_t threshold = (0 - n) % n;
    while (lo < threshold) {
      x = next_u64();
      mted = static_cast<__uint128_t>(x) * n;
      lo = static_cast<std::uint64_t>(mted);
    }
  }
  return static_cast<std::uint64_t>(mted >> 64);
}

double Rng::exponential() { return -std::log(uniform_pos()); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * f;
  has_spare_ = true;
  return u * f;
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw ValidationError("gamma: shape must be > 0");
  if (shape < 1.0) {
    // Boost: G(a) = G(a+1) * U^{1/a}.
    const double u = uniform_pos();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_pos();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::poisson_small(double mean) {
  // Knuth product-of-uniforms; fine for mean <= ~30 (e^-30 ~ 1e-13).
  const double limit = std::exp(-mean);
  double prod = 1.0;
  double k = -1.0;
  do {
    prod *= uniform_pos();
    k += 1.0;
  } while (prod > limit);
  return k;
}

double Rng::poisson_large(double mean) {
  // Recursive gamma split: with n ~ 7/8 mean, G ~ Gamma(n) either lands
  // below mean (n arrivals happened, recurse on the rest) or above it
  // (conditionally binomial on n - 1).
  double total = 0.0;
  while (mean > 30.0) {
    const double n = std::floor(mean * 0.875);
    const double g = gamma(n);
    if (g <= mean) {
      total += n;
      mean -= g;
    } else {
      return total + binomial(n - 1.0, mean / g);
    }
  }
  return total + poisson_small(mean);
}

double Rng::poisson(double mean) {
  if (!(mean >= 0.0)) throw ValidationError("poisson: mean must be >= 0");
  if (mean == 0.0) return 0.0;
  if (mean <= 30.0) return poisson_small(mean);
  if (mean <= kExactCap) return poisson_large(mean);
  // Quota path: deterministic bulk plus an unbiased fractional unit.
  const double base = std::floor(mean);
  const double frac = mean - base;
  return base + ((uniform() < frac) ? 1.0 : 0.0);
}

double Rng::binomial_inversion(double n, double p) {
  // Count successes by jumping over failure runs; O(np) expected.
  const double lq = std::log1p(-p);
  double count = 0.0;
  double pos = 0.0;
  for (;;) {
    pos += std::floor(std::log(uniform_pos()) / lq) + 1.0;
    if (pos > n) return count;
    count += 1.0;
  }
}

double Rng::binomial_split(double n, double p) {
  // Beta median split keeps recursion depth O(log n) and every branch exact.
  double total = 0.0;
  for (;;) {
    if (n * p <= 30.0 || n <= 64.0) return total + binomial_inversion(n, p);
    const double a = std::floor(n / 2.0) + 1.0;
    const double b = n + 1.0 - a;
    const double ga = gamma(a);
    const double gb = gamma(b);
    const double x = ga / (ga + gb);  // Beta(a, b)
    if (x <= p) {
      total += a;
      p = (p - x) / (1.0 - x);
      n = n - a;
    } else {
      p = p / x;
      n = a - 1.0;
    }
  }
}

double Rng::binomial(double n, double p) {
  if (!(n >= 0.0) || std::floor(n) != n)
    throw ValidationError("binomial: n must be a nonnegative integer");
  if (!(p >= 0.0 && p <= 1.0))
    throw ValidationError("binomial: p must be in [0, 1]");
  if (n == 0.0 || p == 0.0) return 0.0;
  if (p == 1.0) return n;
  if (n > kExactCap) {
    const double mean = n * p;
    const double base = std::floor(mean);
    return base + ((uniform() < mean - base) ? 1.0 : 0.0);
  }
  if (p > 0.5) return n - binomial(n, 1.0 - p);
  if (n * p <= 30.0) return binomial_inversion(n, p);
  return binomial_split(n, p);
}

double Rng::negative_binomial(double k, double p) {
  if (!(k > 0.0)) throw ValidationError("negative_binomial: k must be > 0");
  if (!(p > 0.0 && p <= 1.0))
    throw ValidationError("negative_binomial: p must be in (0, 1]");
  if (p == 1.0) return 0.0;
  // Gamma-Poisson mixture: N ~ Poisson(G), G ~ Gamma(k, (1-p)/p).
  const double g = gamma(k) * (1.0 - p) / p;
  return poisson(g);
}

int Rng::categorical(const std::vector<double>& cum) {
  const double u = uniform();
  const int n = static_cast<int>(cum.size());
  for (int i = 0; i < n - 1; ++i)
    if (u < cum[static_cast<std::size_t>(i)]) return i;
  return n - 1;
}

std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace cbrw
