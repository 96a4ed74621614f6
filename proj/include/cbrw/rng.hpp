#pragma once

#include <cstdint>
#include <vector>

namespace cbrw {

// xoshiro256++ with splitmix64 seeding.  Streams are a pure function of
// (base_seed, stream_index), so replica i draws the same numbers no matter
// which thread runs it or how the work is scheduled.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos();

  // Uniform integer in [0, n), n >= 1.
  std::uint64_t uniform_below(std::uint64_t n);

  double exponential();  // rate 1
  double normal();       // standard, polar method

  // Gamma(shape, 1), shape > 0 (Marsaglia-Tsang, with boost for shape < 1).
  double gamma(double shape);

  // Exact integer samplers.  Counts are carried in doubles; every value they
  // return is an exact integer as long as it stays below 2^53.
  double poisson(double mean);
  double binomial(double n, double p);
  // Failures before the k-th success, success probability p (k may be large).
  double negative_binomial(double k, double p);

  // Index draw from cumulative probabilities (last entry ~ 1).
  int categorical(const std::vector<double>& cum);

 private:
  std::uint64_t s_[4];
  double spare_normal_ = 0.0;
  bool has_spare_ = false;

  double poisson_small(double mean);
  double poisson_large(double mean);
  double binomial_inversion(double n, double p);
  double binomial_split(double n, double p);
};

// Stable 64-bit hash for strings (FNV-1a); used for config fingerprints.
std::uint64_t fnv1a64(const void* data, std::size_t len);

}  // namespace cbrw
