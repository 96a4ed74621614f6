#include "cbrw/spine.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>

#include "cbrw/engine.hpp"
#include "cbrw/errors.hpp"
#include "cbrw/expectation_dp.hpp"
#include "cbrw/rng.hpp"

namespace cbrw {

namespace {

double mean_se(const std::vector<double>& xs, double* se) {
  const double n = static_cast<double>(xs.size());
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  *se = std::sqrt(ss / (n * (n - 1.0)));
  return mean;
}

// Least squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

// Weighted stay-positive mass after `steps` steps from 0: kill at <= 0,
// return the total mass strictly above `level`.
double stay_positive_exceedance(const StepLaw& walk, int steps, double level) {
  const int lo = 1;
  const int hi = std::max(1, steps * walk.max_step());
  std::vector<double> cur(static_cast<std::size_t>(hi - lo + 1), 0.0);
  std::vector<double> nxt(cur.size(), 0.0);
  // First step leaves the unconstrained origin.
  for (const auto& [s, p] : walk.steps())
    if (s >= lo && s <= hi) cur[static_cast<std::size_t>(s - lo)] += p;
  for (int j = 1; j < steps; ++j) {
    std::fill(nxt.begin(), nxt.end(), 0.0);
    for (int x = lo; x <= hi; ++x) {
      const double v = cur[static_cast<std::size_t>(x - lo)];
      if (v == 0.0) continue;
      for (const auto& [s, p] : walk.steps()) {
        const int y = x + s;
        if (y >= lo && y <= hi) nxt[static_cast<std::size_t>(y - lo)] += v * p;
      }
    }
    cur.swap(nxt);
  }
  double out = 0.0;
  for (int x = lo; x <= hi; ++x)
    if (static_cast<double>(x) > level) out += cur[static_cast<std::size_t>(x - lo)];
  return out;
}

}  // namespace

IdentityCheck many_to_one_check(const ModelSpec& model, int n,
                                const std::function<double(int)>& f) {
  IdentityCheck out;
  ExpectationTable table(model, n);
  out.lhs = table.weighted(n, f);
  out.rhs = weighted_walk_expectation(model, n, f);
  out.diff = std::abs(out.lhs - out.rhs);
  return out;
}

SeriesCheck delta_martingale_check(const ModelSpec& model,
                                   const PhiFunction& phi, double r,
                                   const std::vector<int>& times,
                                   long replicas, Rng& rng) {
  if (times.empty() || times.front() < 1)
    throw ValidationError("delta_martingale_check: times must start at >= 1");
  if (!std::is_sorted(times.begin(), times.end()))
    throw ValidationError("delta_martingale_check: times must be ascending");
  SeriesCheck out;
  out.times = times;
  out.reference = phi(model.initial_position);
  const std::size_t nt = times.size();
  std::vector<double> sum(nt, 0.0);
  std::vector<double> sumsq(nt, 0.0);
  const int n_max = times.back();
  for (long rep = 0; rep < replicas; ++rep) {
    int pos = model.initial_position;
    double w = 1.0;  // product of m1 along visited sites before the step
    std::size_t ti = 0;
    for (int gen = 1; gen <= n_max; ++gen) {
      w *= model.m1(pos);
      pos += model.walk.sample(rng);
      if (gen == times[ti]) {
        const double delta = std::exp(-r * gen) * phi(pos) * w;
        sum[ti] += delta;
        sumsq[ti] += delta * delta;
        ++ti;
      }
    }
  }
  const double nr = static_cast<double>(replicas);
  out.mean.resize(nt);
  out.se.resize(nt);
  for (std::size_t i = 0; i < nt; ++i) {
    out.mean[i] = sum[i] / nr;
    const double var = (sumsq[i] - nr * out.mean[i] * out.mean[i]) / (nr - 1.0);
    out.se[i] = std::sqrt(std::max(0.0, var) / nr);
  }
  return out;
}

CoupledPairState coupled_pair_step(const CoupledPairState& state,
                                   const ModelSpec& model, Rng& rng) {
  CoupledPairState next = state;
  next.n = state.n + 1;
  if (state.decoupled) {
    next.s1 = state.s1 + model.walk.sample(rng);
    next.s2 = state.s2 + model.walk.sample(rng);
    return next;
  }
  const int x = state.s1;  // coupled legs share a site
  const double m2 = model.m2(x);
  if (m2 <= 0.0)
    throw ValidationError("coupled_pair_step: offspring second moment vanishes at a catalyst");
  const double keep = model.m1(x) / m2;
  if (rng.uniform() < keep) {
    const int s = model.walk.sample(rng);
    next.s1 = x + s;
    next.s2 = x + s;
  } else {
    next.decoupled = true;
    next.s1 = x + model.walk.sample(rng);
    next.s2 = x + model.walk.sample(rng);
  }
  return next;
}

DecouplingCheck decoupling_check(const ModelSpec& model, int k_max,
                                 long replicas, Rng& rng) {
  if (k_max < 1) throw ValidationError("decoupling_check: k_max must be >= 1");
  DecouplingCheck out;
  const std::size_t nk = static_cast<std::size_t>(k_max) + 1;
  std::vector<long> coupled_count(nk, 0);
  double s1_sum = 0.0;
  double s1_sumsq = 0.0;
  for (long rep = 0; rep < replicas; ++rep) {
    CoupledPairState st;
    st.s1 = model.initial_position;
    st.s2 = model.initial_position;
    ++coupled_count[0];
    for (int k = 1; k <= k_max; ++k) {
      st = coupled_pair_step(st, model, rng);
      if (!st.decoupled) ++coupled_count[static_cast<std::size_t>(k)];
    }
    s1_sum += st.s1;
    s1_sumsq += static_cast<double>(st.s1) * st.s1;
  }
  const double nr = static_cast<double>(replicas);
  out.empirical.resize(nk);
  out.se.resize(nk);
  for (std::size_t k = 0; k < nk; ++k) {
    const double p = static_cast<double>(coupled_count[k]) / nr;
    out.empirical[k] = p;
    out.se[k] = std::sqrt(p * (1.0 - p) / nr);
  }
  out.mean_s1 = s1_sum / nr;
  const double var = (s1_sumsq - nr * out.mean_s1 * out.mean_s1) / (nr - 1.0);
  out.se_s1 = std::sqrt(std::max(0.0, var) / nr);

  // Exact survival of the coupling: weighted walk DP where each visit
  // multiplies by m1/m2 before stepping.
  out.exact.resize(nk);
  out.exact[0] = 1.0;
  const int lo0 = model.initial_position + k_max * std::min(0, model.walk.min_step());
  const int hi0 = model.initial_position + k_max * std::max(0, model.walk.max_step());
  std::vector<double> cur(static_cast<std::size_t>(hi0 - lo0 + 1), 0.0);
  std::vector<double> nxt(cur.size(), 0.0);
  cur[static_cast<std::size_t>(model.initial_position - lo0)] = 1.0;
  for (int k = 1; k <= k_max; ++k) {
    std::fill(nxt.begin(), nxt.end(), 0.0);
    for (int x = lo0; x <= hi0; ++x) {
      double v = cur[static_cast<std::size_t>(x - lo0)];
      if (v == 0.0) continue;
      const double m2 = model.m2(x);
      if (m2 <= 0.0)
        throw ValidationError("decoupling_check: offspring second moment vanishes at a catalyst");
      v *= model.m1(x) / m2;
      for (const auto& [s, p] : model.walk.steps()) {
        const int y = x + s;
        if (y >= lo0 && y <= hi0) nxt[static_cast<std::size_t>(y - lo0)] += v * p;
      }
    }
    cur.swap(nxt);
    out.exact[static_cast<std::size_t>(k)] =
        std::accumulate(cur.begin(), cur.end(), 0.0);
  }
  return out;
}

SecondMomentCheck second_moment_check(const ModelSpec& model,
                                      const PhiFunction& phi, double r, int n,
                                      long replicas, std::uint64_t seed,
                                      int threads) {
  if (n < 1) throw ValidationError("second_moment_check: n must be >= 1");
  SecondMomentCheck out;

  EnsembleSpec espec;
  espec.times = {n};
  espec.replicas = replicas;
  espec.seed = seed;
  espec.cap = 1e300;  // short horizons; never thin the population here
  espec.threads = threads;
  const EnsembleResult res = run_ensemble(model, phi, r, espec);
  std::vector<double> sq(static_cast<std::size_t>(replicas), 0.0);
  for (long rep = 0; rep < replicas; ++rep) {
    const double l = res.at(rep, 0).lambda_n;
    sq[static_cast<std::size_t>(rep)] = l * l;
  }
  out.direct = mean_se(sq, &out.direct_se);

  // Two-spine pair with the product weight: m2 at the shared site while
  // coupled, m1 on each leg afterwards.
  Rng rng(seed, 0);
  std::vector<double> vals(static_cast<std::size_t>(replicas), 0.0);
  const double scale = std::exp(-2.0 * r * n);
  for (long rep = 0; rep < replicas; ++rep) {
    CoupledPairState st;
    st.s1 = model.initial_position;
    st.s2 = model.initial_position;
    double w = 1.0;
    for (int k = 0; k < n; ++k) {
      if (st.decoupled)
        w *= model.m1(st.s1) * model.m1(st.s2);
      else
        w *= model.m2(st.s1);
      st = coupled_pair_step(st, model, rng);
    }
    vals[static_cast<std::size_t>(rep)] = scale * phi(st.s1) * phi(st.s2) * w;
  }
  out.spine = mean_se(vals, &out.spine_se);
  const double denom = std::sqrt(out.direct_se * out.direct_se +
                                 out.spine_se * out.spine_se);
  out.diff_in_se = std::abs(out.direct - out.spine) / denom;
  return out;
}

MogulskiiProbe mogulskii_probe(const StepLaw& walk, double a,
                               const std::vector<int>& j_list, long replicas,
                               Rng& rng) {
  if (j_list.empty() || j_list.front() < 1)
    throw ValidationError("mogulskii_probe: j_list must start at >= 1");
  if (a <= std::max(0.0, walk.mean()))
    throw ValidationError("mogulskii_probe: a must exceed the walk speed");
  MogulskiiProbe out;
  out.j_list = j_list;
  out.rate_target = walk.psi_star(a);

  // Tilt with mean a, so the rare slope becomes typical.
  double lo = 0.0;
  double hi = 1.0;
  while (walk.psi_prime(hi) < a) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (walk.psi_prime(mid) < a ? lo : hi) = mid;
  }
  const double theta = 0.5 * (lo + hi);
  out.theta = theta;
  const StepLaw tilted = walk.tilt(theta);
  const double psi_theta = walk.psi(theta);

  const int j_max = j_list.back();
  const std::size_t nj = j_list.size();
  std::vector<double> sum(nj, 0.0);
  std::vector<double> sumsq(nj, 0.0);
  for (long rep = 0; rep < replicas; ++rep) {
    int pos = 0;
    bool positive = true;
    std::size_t ji = 0;
    for (int j = 1; j <= j_max && ji < nj; ++j) {
      pos += tilted.sample(rng);
      if (pos <= 0) positive = false;
      if (j == j_list[ji]) {
        if (positive && pos > a * j) {
          const double w = std::exp(-theta * pos + j * psi_theta);
          sum[ji] += w;
          sumsq[ji] += w * w;
        }
        ++ji;
      }
      if (!positive) {
        // Dead for every remaining horizon; contributes zero.
        break;
      }
    }
  }
  const double nr = static_cast<double>(replicas);
  out.p_hat.resize(nj);
  out.se.resize(nj);
  std::vector<double> xs(nj);
  std::vector<double> ys(nj);
  for (std::size_t i = 0; i < nj; ++i) {
    out.p_hat[i] = sum[i] / nr;
    const double var = (sumsq[i] - nr * out.p_hat[i] * out.p_hat[i]) / (nr - 1.0);
    out.se[i] = std::sqrt(std::max(0.0, var) / nr);
    xs[i] = static_cast<double>(j_list[i]);
    ys[i] = -std::log(out.p_hat[i]);
  }
  out.rate_fit = fit_slope(xs, ys);
  return out;
}

TubeIdentityCheck tube_identity_check(const StepLaw& walk, double r, double t0,
                                      double alpha, int k, int n, double z,
                                      long replicas, Rng& rng) {
  if (k < 0 || n <= k)
    throw ValidationError("tube_identity_check: need 0 <= k < n");
  TubeIdentityCheck out;
  const int steps = n - k;
  const double level = alpha * n + z;
  out.lhs_exact = std::exp(r * k) * stay_positive_exceedance(walk, steps, level);

  const StepLaw tilted = walk.tilt(t0);
  const double pref = std::exp(-t0 * z);
  double sum = 0.0;
  double sumsq = 0.0;
  for (long rep = 0; rep < replicas; ++rep) {
    int pos = 0;
    bool positive = true;
    for (int j = 0; j < steps; ++j) {
      pos += tilted.sample(rng);
      if (pos <= 0) {
        positive = false;
        break;
      }
    }
    // The overshoot window is an explicit exponential of rate t0.
    const double e = rng.exponential() / t0;
    const double hit =
        (positive && pos > level && pos <= level + e) ? 1.0 : 0.0;
    sum += hit;
    sumsq += hit;
  }
  const double nr = static_cast<double>(replicas);
  const double mean = sum / nr;
  const double var = (sumsq - nr * mean * mean) / (nr - 1.0);
  out.rhs_mc = pref * mean;
  out.rhs_se = pref * std::sqrt(std::max(0.0, var) / nr);
  return out;
}

ExceedanceProbe exceedance_probe(const ModelSpec& model, double alpha, int k,
                                 int n, double z) {
  if (k < 0 || n <= k)
    throw ValidationError("exceedance_probe: need 0 <= k < n");
  ExceedanceProbe out;
  out.q = stay_positive_exceedance(model.walk, n - k, alpha * n + z);
  const OffspringLaw& f = model.sole_offspring();
  out.p = 1.0 - f.pgf(1.0 - out.q);
  out.lower = f.pgf_prime(1.0 - out.q) * out.q;
  out.upper = f.mean() * out.q;
  out.bracket_ok = out.lower <= out.p + 1e-15 && out.p <= out.upper + 1e-15;
  return out;
}

}  // namespace cbrw
