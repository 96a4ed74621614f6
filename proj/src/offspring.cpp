#include "cbrw/offspring.hpp"

#include <cmath>

#include "cbrw/errors.hpp"
#include "cbrw/rng.hpp"

namespace cbrw {

namespace {
constexpr double kExactCap = 562949953421312.0;  // 2^49

// One-sided 4th-order derivative at 1 with Richardson extrapolation; the pgf
// is only defined on [0, 1] so central stencils are unavailable.
template <typename F>
double derivative_at_one(F&& f, double h) {
  const auto stencil = [&](double hh) {
    return (25.0 * f(1.0) - 48.0 * f(1.0 - hh) + 36.0 * f(1.0 - 2.0 * hh) -
            16.0 * f(1.0 - 3.0 * hh) + 3.0 * f(1.0 - 4.0 * hh)) /
           (12.0 * hh);
  };
  const double d1 = stencil(h);
  const double d2 = stencil(0.5 * h);
  return (16.0 * d2 - d1) / 15.0;
}
}  // namespace

OffspringLaw::OffspringLaw(OffspringKind kind, std::vector<double> params)
    : kind_(kind), params_(std::move(params)) {
  switch (kind_) {
    case OffspringKind::kDeterministic: {
      const double c = params_[0];
      mean_ = c;
      m2_ = c * c;
      break;
    }
    case OffspringKind::kPoisson: {
      const double mu = params_[0];
      if (!(mu >= 0.0) || !std::isfinite(mu))
        throw ValidationError("offspring poisson: mean must be finite, >= 0");
      mean_ = mu;
      m2_ = mu + mu * mu;
      break;
    }
    case OffspringKind::kBinomial: {
      const double n = params_[0], p = params_[1];
      if (!(n >= 0.0) || std::floor(n) != n)
        throw ValidationError("offspring binomial: n must be an integer >= 0");
      if (!(p >= 0.0 && p <= 1.0))
        throw ValidationError("offspring binomial: p must be in [0, 1]");
      mean_ = n * p;
      m2_ = n * p * (1.0 - p) + mean_ * mean_;
      break;
    }
    case OffspringKind::kGeometric: {
      const double p = params_[0];
      if (!(p > 0.0 && p <= 1.0))
        throw ValidationError("offspring geometric: p must be in (0, 1]");
      const double q = 1.0 - p;
      mean_ = q / p;
      m2_ = q * (1.0 + q) / (p * p);
      break;
    }
    case OffspringKind::kEmpirical: {
      double sum = 0.0;
      for (double q : params_) {
        if (!(q >= 0.0))
          throw ValidationError("offspring empirical: negative probability");
        sum += q;
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw ValidationError("offspring empirical: pmf must sum to 1");
      for (std::size_t j = 0; j < params_.size(); ++j) {
        mean_ += static_cast<double>(j) * params_[j];
        m2_ += static_cast<double>(j) * static_cast<double>(j) * params_[j];
      }
      double c = 0.0;
      cum_.reserve(params_.size());
      for (double q : params_) {
        c += q;
        cum_.push_back(c);
      }
      cum_.back() = 1.0;
      break;
    }
  }
  if (!std::isfinite(mean_) || mean_ < 0.0)
    throw ValidationError("offspring law: invalid mean");
  // Step shrinks with the mean so the stencil stays inside the pgf's
  // curvature scale for large counts.
  const double h = 1e-3 / std::max(1.0, mean_);
  const double fd = derivative_at_one([this](double x) { return pgf(x); }, h);
  // Rounding in the stencil grows like eps / h, i.e. proportionally to the
  // mean with the adaptive step above.
  if (std::abs(fd - mean_) > 1e-8 * std::max(1.0, mean_))
    throw ValidationError("offspring law: pgf derivative at 1 disagrees with "
                          "the analytic mean");
  if (std::abs(pgf(1.0) - 1.0) > 1e-12)
    throw ValidationError("offspring law: pgf(1) must equal 1");
}

OffspringLaw OffspringLaw::deterministic(long count) {
  if (count < 0) throw ValidationError("offspring deterministic: count < 0");
  return OffspringLaw(OffspringKind::kDeterministic,
                      {static_cast<double>(count)});
}
OffspringLaw OffspringLaw::poisson(double mean) {
  return OffspringLaw(OffspringKind::kPoisson, {mean});
}
OffspringLaw OffspringLaw::binomial(long n, double p) {
  return OffspringLaw(OffspringKind::kBinomial, {static_cast<double>(n), p});
}
OffspringLaw OffspringLaw::geometric(double p) {
  return OffspringLaw(OffspringKind::kGeometric, {p});
}
OffspringLaw OffspringLaw::empirical(std::vector<double> pmf) {
  if (pmf.empty()) throw ValidationError("offspring empirical: empty pmf");
  return OffspringLaw(OffspringKind::kEmpirical, std::move(pmf));
}

double OffspringLaw::pgf(double x) const {
  switch (kind_) {
    case OffspringKind::kDeterministic:
      return std::pow(x, params_[0]);
    case OffspringKind::kPoisson:
      return std::exp(params_[0] * (x - 1.0));
    case OffspringKind::kBinomial:
      return std::pow(1.0 - params_[1] + params_[1] * x, params_[0]);
    case OffspringKind::kGeometric:
      return params_[0] / (1.0 - (1.0 - params_[0]) * x);
    case OffspringKind::kEmpirical: {
      // Horner on the pmf coefficients.
      double acc = 0.0;
      for (std::size_t j = params_.size(); j-- > 0;)
        acc = acc * x + params_[j];
      return acc;
    }
  }
  return 0.0;
}

double OffspringLaw::pgf_prime(double x) const {
  switch (kind_) {
    case OffspringKind::kDeterministic: {
      const double c = params_[0];
      return c == 0.0 ? 0.0 : c * std::pow(x, c - 1.0);
    }
    case OffspringKind::kPoisson:
      return params_[0] * std::exp(params_[0] * (x - 1.0));
    case OffspringKind::kBinomial: {
      const double n = params_[0];
      const double p = params_[1];
      if (n == 0.0) return 0.0;
      return n * p * std::pow(1.0 - p + p * x, n - 1.0);
    }
    case OffspringKind::kGeometric: {
      const double p = params_[0];
      const double d = 1.0 - (1.0 - p) * x;
      return p * (1.0 - p) / (d * d);
    }
    case OffspringKind::kEmpirical: {
      double acc = 0.0;
      for (std::size_t j = params_.size(); j-- > 1;)
        acc = acc * x + static_cast<double>(j) * params_[j];
      return acc;
    }
  }
  return 0.0;
}

double OffspringLaw::sample(Rng& rng) const {
  switch (kind_) {
    case OffspringKind::kDeterministic:
      return params_[0];
    case OffspringKind::kPoisson:
      return rng.poisson(params_[0]);
    case OffspringKind::kBinomial:
      return rng.binomial(params_[0], params_[1]);
    case OffspringKind::kGeometric:
      return rng.negative_binomial(1.0, params_[0]);
    case OffspringKind::kEmpirical:
      return static_cast<double>(rng.categorical(cum_));
  }
  return 0.0;
}

double OffspringLaw::sample_sum(double k, Rng& rng) const {
  if (!(k >= 0.0) || std::floor(k) != k)
    throw ValidationError("sample_sum: k must be a nonnegative integer value");
  if (k == 0.0) return 0.0;
  if (k > kExactCap) {
    // Quota path: counts this large only move by O(1e-16) relative noise.
    const double mean = k * mean_;
    const double base = std::floor(mean);
    const double frac = mean - base;
    if (mean > 0x1p53) return mean;
    return base + ((rng.uniform() < frac) ? 1.0 : 0.0);
  }
  switch (kind_) {
    case OffspringKind::kDeterministic:
      return k * params_[0];
    case OffspringKind::kPoisson:
      return rng.poisson(k * params_[0]);
    case OffspringKind::kBinomial:
      return rng.binomial(k * params_[0], params_[1]);
    case OffspringKind::kGeometric:
      return rng.negative_binomial(k, params_[0]);
    case OffspringKind::kEmpirical: {
      // Multinomial split of k draws over the pmf classes.
      double total = 0.0;
      double remaining = k;
      double mass = 1.0;
      for (std::size_t j = 0; j < params_.size() && remaining > 0.0; ++j) {
        const double p = params_[j] / mass;
        const double c =
            (j + 1 == params_.size()) ? remaining
                                      : rng.binomial(remaining, std::min(p, 1.0));
        total += static_cast<double>(j) * c;
        remaining -= c;
        mass -= params_[j];
      }
      return total;
    }
  }
  return 0.0;
}

std::string OffspringLaw::describe() const {
  switch (kind_) {
    case OffspringKind::kDeterministic:
      return "deterministic(" + std::to_string(static_cast<long>(params_[0])) + ")";
    case OffspringKind::kPoisson:
      return "poisson(" + std::to_string(params_[0]) + ")";
    case OffspringKind::kBinomial:
      return "binomial(" + std::to_string(static_cast<long>(params_[0])) + "," +
             std::to_string(params_[1]) + ")";
    case OffspringKind::kGeometric:
      return "geometric(" + std::to_string(params_[0]) + ")";
    case OffspringKind::kEmpirical:
      return "empirical(" + std::to_string(params_.size()) + " classes)";
  }
  return "?";
}

}  // namespace cbrw
