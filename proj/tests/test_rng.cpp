#include <cmath>
#include <vector>

#include "cbrw/rng.hpp"
#include "doctest.h"

using cbrw::Rng;

namespace {
double binom_pmf(int n, double p, int k) {
  double c = 1.0;
  for (int i = 0; i < k; ++i) c = c * (n - i) / (i + 1);
  return c * std::pow(p, k) * std::pow(1.0 - p, n - k);
}
double pois_pmf(double lam, int k) {
  double v = std::exp(-lam);
  for (int i = 1; i <= k; ++i) v *= lam / i;
  return v;
}
}  // namespace

TEST_SUITE_BEGIN("rng");

TEST_CASE("streams are reproducible and distinct") {
  Rng a(42, 7), b(42, 7), c(42, 8);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 64; ++i) {
    const auto x = a.next_u64(), y = b.next_u64(), z = c.next_u64();
    all_equal = all_equal && (x == y);
    any_diff = any_diff || (x != z);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("uniform moments") {
  Rng rng(1);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  const double se = 1.0 / std::sqrt(12.0 * n);
  CHECK(std::abs(sum / n - 0.5) < 5 * se);
}

TEST_CASE("binomial small matches exact pmf") {
  Rng rng(2);
  const int draws = 200000, n = 5;
  const double p = 0.3;
  std::vector<long> freq(n + 1, 0);
  for (int i = 0; i < draws; ++i) {
    const double v = rng.binomial(n, p);
    REQUIRE(v == std::floor(v));
    REQUIRE(v >= 0);
    REQUIRE(v <= n);
    ++freq[static_cast<std::size_t>(v)];
  }
  for (int k = 0; k <= n; ++k) {
    const double q = binom_pmf(n, p, k);
    const double se = std::sqrt(q * (1 - q) / draws);
    CHECK(std::abs(static_cast<double>(freq[static_cast<std::size_t>(k)]) / draws - q) < 5 * se);
  }
}

TEST_CASE("binomial split path") {
  Rng rng(3);
  const double n = 1000000.0, p = 0.3;
  const int draws = 2000;
  double sum = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double v = rng.binomial(n, p);
    REQUIRE(v == std::floor(v));
    sum += v;
  }
  const double sd = std::sqrt(n * p * (1 - p));
  CHECK(std::abs(sum / draws - n * p) < 5 * sd / std::sqrt(draws));
}

TEST_CASE("poisson small matches exact pmf") {
  Rng rng(4);
  const int draws = 200000;
  const double lam = 3.0;
  std::vector<long> freq(12, 0);
  for (int i = 0; i < draws; ++i) {
    const double v = rng.poisson(lam);
    REQUIRE(v == std::floor(v));
    if (v < 12) ++freq[static_cast<std::size_t>(v)];
  }
  for (int k = 0; k < 12; ++k) {
    const double q = pois_pmf(lam, k);
    const double se = std::sqrt(q * (1 - q) / draws);
    CHECK(std::abs(static_cast<double>(freq[static_cast<std::size_t>(k)]) / draws - q) < 5 * se);
  }
}

TEST_CASE("poisson split path") {
  Rng rng(5);
  const double lam = 10000.0;
  const int draws = 2000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double v = rng.poisson(lam);
    REQUIRE(v == std::floor(v));
    sum += v;
    sum2 += (v - lam) * (v - lam);
  }
  CHECK(std::abs(sum / draws - lam) < 5 * std::sqrt(lam) / std::sqrt(draws));
  CHECK(sum2 / draws > 0.8 * lam);
  CHECK(sum2 / draws < 1.2 * lam);
}

TEST_CASE("poisson quota path keeps the mean") {
  Rng rng(6);
  const double lam = 1e15 + 0.4;
  const double base = std::floor(lam);
  const int draws = 2000;
  double frac_sum = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double v = rng.poisson(lam);
    const double d = v - base;
    REQUIRE((d == 0.0 || d == 1.0));
    frac_sum += d;
  }
  CHECK(std::abs(frac_sum / draws - 0.4) < 5 * 0.49 / std::sqrt(draws));
}

TEST_CASE("negative binomial moments") {
  Rng rng(7);
  const double k = 3.0, p = 0.4;
  const int draws = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double v = rng.negative_binomial(k, p);
    REQUIRE(v == std::floor(v));
    sum += v;
    sum2 += v * v;
  }
  const double mean = k * (1 - p) / p;       // 4.5
  const double var = k * (1 - p) / (p * p);  // 11.25
  CHECK(std::abs(sum / draws - mean) < 5 * std::sqrt(var / draws));
  CHECK(std::abs(sum2 / draws - sum / draws * sum / draws - var) < 0.1 * var);
}

TEST_CASE("normal and gamma moments") {
  Rng rng(8);
  const int n = 100000;
  double sn = 0.0, sn2 = 0.0, sg = 0.0, sg2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    const double g = rng.gamma(4.2);
    sg += g;
    sg2 += g * g;
  }
  CHECK(std::abs(sn / n) < 5.0 / std::sqrt(n));
  CHECK(std::abs(sn2 / n - 1.0) < 0.05);
  CHECK(std::abs(sg / n - 4.2) < 5 * std::sqrt(4.2 / n));
  CHECK(std::abs(sg2 / n - sg / n * sg / n - 4.2) < 0.2);
}

TEST_CASE("categorical frequencies") {
  Rng rng(9);
  const std::vector<double> cum = {0.2, 0.5, 1.0};
  const int n = 100000;
  std::vector<long> freq(3, 0);
  for (int i = 0; i < n; ++i) ++freq[static_cast<std::size_t>(rng.categorical(cum))];
  const double probs[3] = {0.2, 0.3, 0.5};
  for (int k = 0; k < 3; ++k) {
    const double se = std::sqrt(probs[k] * (1 - probs[k]) / n);
    CHECK(std::abs(static_cast<double>(freq[static_cast<std::size_t>(k)]) / n - probs[k]) < 5 * se);
  }
}

TEST_CASE("fnv1a64 is stable") {
  const char* s = "model fingerprint";
  const auto h1 = cbrw::fnv1a64(s, 17);
  const auto h2 = cbrw::fnv1a64(s, 17);
  CHECK(h1 == h2);
  CHECK(h1 != cbrw::fnv1a64("model fingerprint!", 18));
}

TEST_SUITE_END();
