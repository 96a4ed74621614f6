#include "cbrw/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "cbrw/errors.hpp"
#include "cbrw/rng.hpp"
#include "cbrw/walk_sim.hpp"

namespace cbrw {

namespace {

constexpr double kZeroMeanTol = 1e-12;
constexpr int kBisectCap = 200;
constexpr std::size_t kDpEntryBudget = 100000000;
// Malthusian roots below this are not resolvable within the DP budget.
constexpr double kRateFloor = 0.01;

// Killed-at-origin DP exposing, step by step, the first-return mass u_k,
// the surviving mass vector, and the total alive mass.
class KilledWalkDp {
 public:
  KilledWalkDp(const StepLaw& walk, int horizon)
      : walk_(walk),
        span_lo_(horizon * walk.min_step()),
        span_hi_(horizon * walk.max_step()) {
    const std::size_t width =
        static_cast<std::size_t>(span_hi_ - span_lo_) + 1;
    if (width > kDpEntryBudget)
      throw MemoryBudgetError("killed walk DP: window of " +
                              std::to_string(width) +
                              " entries exceeds budget");
    alive_.assign(width, 0.0);
    next_.assign(width, 0.0);
    alive_[idx(0)] = 1.0;
    alive_mass_ = 1.0;
  }

  // Advance one step; returns u_k, the mass entering the origin.
  double step() {
    const int nlo = std::max(lo_ + walk_.min_step(), span_lo_);
    const int nhi = std::min(hi_ + walk_.max_step(), span_hi_);
    for (int x = nlo; x <= nhi; ++x) next_[idx(x)] = 0.0;
    for (int x = lo_; x <= hi_; ++x) {
      const double mass = alive_[idx(x)];
      if (mass == 0.0) continue;
      for (const auto& [s, p] : walk_.steps()) {
        const int y = x + s;
        if (y < span_lo_ || y > span_hi_) continue;
        next_[idx(y)] += mass * p;
      }
    }
    const double u = next_[idx(0)];
    next_[idx(0)] = 0.0;
    alive_.swap(next_);
    lo_ = nlo;
    hi_ = nhi;
    alive_mass_ -= u;
    return u;
  }

  double alive_mass() const { return alive_mass_; }
  double alive_at(int x) const {
    if (x < lo_ || x > hi_) return 0.0;
    return alive_[idx(x)];
  }

 private:
  std::size_t idx(int x) const { return static_cast<std::size_t>(x - span_lo_); }
  const StepLaw& walk_;
  int span_lo_, span_hi_;
  int lo_ = 0, hi_ = 0;
  std::vector<double> alive_, next_;
  double alive_mass_ = 0.0;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

LaplaceTau laplace_tau(const StepLaw& walk, double r, double precision,
                       int horizon_cap) {
  if (!(r > 0.0)) throw ValidationError("laplace_tau: r must be > 0");
  if (!(precision > 0.0))
    throw ValidationError("laplace_tau: precision must be > 0");
  // Future mass past step k is at most alive_k e^{-r (k+1)}.
  const int k_est = static_cast<int>(std::ceil(std::log(1.0 / precision) / r)) + 1;
  const int horizon = std::min(horizon_cap, std::max(k_est, 8));
  KilledWalkDp dp(walk, horizon);
  const double disc = std::exp(-r);
  double acc = 0.0;
  double w = 1.0;
  LaplaceTau out;
  for (int k = 1; k <= horizon; ++k) {
    w *= disc;
    acc += w * dp.step();
    out.horizon = k;
    out.error_bound = dp.alive_mass() * w * disc;
    if (out.error_bound <= precision) break;
  }
  out.value = acc;
  return out;
}

EscapeProbability escape_probability(const StepLaw& walk, int cap,
                                     int n_samples, Rng& rng) {
  EscapeProbability out;
  out.cap = cap;
  if (std::abs(walk.mean()) <= kZeroMeanTol) {
    // Zero-mean lattice walks are recurrent: no escape.
    out.exact = true;
    return out;
  }
  const auto samples = first_passage_samples(walk, 0, {0},
                                             PassageMode::kFirstReturn, cap,
                                             n_samples, rng);
  long misses = 0;
  for (const auto& s : samples)
    if (!s.hit) ++misses;
  const double p = static_cast<double>(misses) / n_samples;
  out.value = p;
  out.ci_half = 1.96 * std::sqrt(std::max(p * (1.0 - p), 1e-12) / n_samples);
  return out;
}

double extinction_fixed_point(const OffspringLaw& off, double q_esc) {
  if (!(q_esc >= 0.0 && q_esc < 1.0))
    throw ValidationError("extinction_fixed_point: q_esc must be in [0, 1)");
  const double m_eff = off.mean() * (1.0 - q_esc);
  if (m_eff <= 1.0)
    throw SubcriticalModelError(
        "extinction_fixed_point: m (1 - q_esc) = " + std::to_string(m_eff) +
        " <= 1, no root below 1");
  const auto g = [&](double x) {
    return off.pgf(q_esc + x * (1.0 - q_esc)) - x;
  };
  if (g(0.0) == 0.0) return 0.0;  // no death and no escape
  double lo = 0.0, hi = -1.0;
  for (int j = 1; j <= 55; ++j) {
    const double x = 1.0 - std::pow(2.0, -j);
    if (g(x) < 0.0) {
      hi = x;
      break;
    }
    lo = x;
  }
  if (hi < 0.0)
    throw ConvergenceError(
        "extinction_fixed_point: no sign change below 1; model numerically "
        "critical");
  for (int it = 0; it < kBisectCap && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) >= 0.0 ? lo : hi) = mid;
  }
  const double s = 0.5 * (lo + hi);
  if (std::abs(g(s)) > 1e-12)
    throw ConvergenceError("extinction_fixed_point: residual above 1e-12");
  return s;
}

double solve_malthusian(const ModelSpec& model, Rng& rng) {
  const double m = model.sole_offspring().mean();
  const StepLaw& walk = model.walk;
  const double mean0 = walk.mean();
  if (std::abs(mean0) <= kZeroMeanTol) {
    // Recurrent walk: P(tau < infinity) = 1, so supercritical iff m > 1.
    if (m <= 1.0 + 1e-12)
      throw SubcriticalModelError(
          "solve_malthusian: zero-mean walk with m = " + std::to_string(m) +
          " <= 1 (m (1 - q_esc) <= 1)");
  } else {
    const auto esc = escape_probability(walk, 10000, 200000, rng);
    if (m * (1.0 - esc.value) <= 1.0) {
      // esc.value only over-states q_esc, so this is not yet conclusive;
      // fall through to the bracket probe and fail there if no root shows.
      double lo = kRateFloor;
      const auto rho = [&](double r) {
        return m * laplace_tau(walk, r, 1e-9).value;
      };
      if (rho(lo) <= 1.0)
        throw SubcriticalModelError(
            "solve_malthusian: m (1 - q_hat) = " +
            std::to_string(m * (1.0 - esc.value)) + " <= 1 with q_hat = " +
            std::to_string(esc.value) + " +/- " + std::to_string(esc.ci_half) +
            " (MC upper bound, cap " + std::to_string(esc.cap) +
            ") and no root above r = " + std::to_string(kRateFloor));
    }
  }
  double hi = std::log(std::max(m, 1.0 + 1e-9)) + 1.0;
  double lo = std::min(0.05, 0.5 * hi);
  const auto rho = [&](double r, double prec) {
    return m * laplace_tau(walk, r, prec).value;
  };
  while (rho(lo, 1e-9) <= 1.0) {
    lo *= 0.25;
    if (lo < kRateFloor)
      throw SubcriticalModelError(
          "solve_malthusian: no root above r = " + std::to_string(kRateFloor) +
          "; model subcritical or too close to critical for the DP budget");
  }
  for (int it = 0; it < kBisectCap && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rho(mid, 1e-12) > 1.0 ? lo : hi) = mid;
  }
  const double r = 0.5 * (lo + hi);
  const double residual = std::abs(rho(r, 1e-13) - 1.0);
  if (residual > 1e-8)
    throw ConvergenceError("solve_malthusian: residual " + fmt(residual) +
                           " above 1e-8");
  return r;
}

double solve_t0(const StepLaw& walk, double r) {
  if (!(r > 0.0)) throw ValidationError("solve_t0: r must be > 0");
  double lo = 0.0, hi = 1.0;
  while (walk.psi(hi) < r) {
    hi *= 2.0;
    if (hi > 0x1p40)
      throw ConvergenceError("solve_t0: bracket expansion failed");
  }
  for (int it = 0; it < kBisectCap && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    (walk.psi(mid) < r ? lo : hi) = mid;
  }
  const double t0 = 0.5 * (lo + hi);
  if (std::abs(walk.psi(t0) - r) > 1e-9)
    throw ConvergenceError("solve_t0: psi(t0) misses r beyond 1e-9");
  if (!(walk.psi_prime(t0) > 0.0))
    throw ConvergenceError("solve_t0: root not on the increasing branch");
  return t0;
}

PhiFunction PhiFunction::closed_form(double t0, int c) {
  PhiFunction phi;
  phi.closed_form_ = true;
  phi.t0_ = t0;
  phi.center_ = c;
  phi.error_bound_ = 0.0;
  phi.x_max_ = 1 << 30;
  return phi;
}

PhiFunction PhiFunction::table(const StepLaw& walk, double r,
                               const std::vector<int>& sites,
                               const std::vector<double>& boundary,
                               int x_max) {
  if (sites.empty() || sites.size() != boundary.size())
    throw ValidationError("phi table: sites/boundary mismatch");
  if (!(r > 0.0)) throw ValidationError("phi table: r must be > 0");
  const int jump = std::max(walk.max_step(), -walk.min_step());
  // Paths reaching the edge carry discount at least e^{-r margin / jump};
  // sized so that leaked mass stays below 1e-10.
  const int margin =
      static_cast<int>(std::ceil(jump * std::log(1e10) / r)) + jump;
  const int lo = *std::min_element(sites.begin(), sites.end()) - x_max - margin;
  const int hi = *std::max_element(sites.begin(), sites.end()) + x_max + margin;
  const std::size_t width = static_cast<std::size_t>(hi - lo) + 1;
  if (width > kDpEntryBudget)
    throw MemoryBudgetError("phi table: window exceeds budget");
  double vmax = 0.0;
  for (double v : boundary) vmax = std::max(vmax, std::abs(v));
  const int iters =
      static_cast<int>(std::ceil(std::log(1e12 * std::max(vmax, 1.0)) / r)) + 2;
  std::vector<double> cur(width, 0.0), nxt(width, 0.0);
  const auto idx = [&](int x) { return static_cast<std::size_t>(x - lo); };
  for (std::size_t i = 0; i < sites.size(); ++i)
    cur[idx(sites[i])] = boundary[i];
  const double disc = std::exp(-r);
  std::vector<char> is_site(width, 0);
  for (int s : sites) is_site[idx(s)] = 1;
  for (int it = 0; it < iters; ++it) {
    for (int x = lo; x <= hi; ++x) {
      if (is_site[idx(x)]) {
        nxt[idx(x)] = cur[idx(x)];
        continue;
      }
      double acc = 0.0;
      for (const auto& [s, p] : walk.steps()) {
        const int y = x + s;
        if (y < lo || y > hi) continue;  // leaked mass, bounded by margin
        acc += p * cur[idx(y)];
      }
      nxt[idx(x)] = disc * acc;
    }
    cur.swap(nxt);
  }
  PhiFunction phi;
  phi.closed_form_ = false;
  phi.offset_ = lo;
  phi.values_ = std::move(cur);
  phi.error_bound_ = vmax * (std::exp(-r * iters) + 1e-10);
  phi.x_max_ = x_max;
  return phi;
}

double PhiFunction::operator()(int x) const {
  if (closed_form_) return std::exp(-t0_ * std::abs(x - center_));
  const long i = static_cast<long>(x) - offset_;
  if (i < 0 || i >= static_cast<long>(values_.size())) return 0.0;
  return values_[static_cast<std::size_t>(i)];
}

LadderStatistics ladder_statistics(const StepLaw& walk, int n_samples,
                                   Rng& rng) {
  if (!(walk.mean() > kZeroMeanTol))
    throw ValidationError(
        "ladder_statistics: walk must have strictly positive drift");
  LadderStatistics out;
  out.e_s1 = walk.mean();
  double sum_h = 0.0, sum_h2 = 0.0, sum_t = 0.0, sum_t2 = 0.0;
  double sum_d = 0.0, sum_d2 = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    long cap = 1000000;
    for (;;) {
      int s = 0;
      long t = 0;
      bool done = false;
      while (t < cap) {
        s += walk.sample(rng);
        ++t;
        if (s > 0) {
          done = true;
          break;
        }
      }
      if (done) {
        const double h = s;
        const double tt = static_cast<double>(t);
        const double d = h - out.e_s1 * tt;
        sum_h += h;
        sum_h2 += h * h;
        sum_t += tt;
        sum_t2 += tt * tt;
        sum_d += d;
        sum_d2 += d * d;
        break;
      }
      ++out.resamples;  // cap hit: enlarge and redraw, never drop
      cap *= 4;
    }
  }
  const double n = n_samples;
  out.e_h1 = sum_h / n;
  out.e_t1 = sum_t / n;
  out.se_h1 = std::sqrt(std::max(sum_h2 / n - out.e_h1 * out.e_h1, 0.0) / n);
  out.se_t1 = std::sqrt(std::max(sum_t2 / n - out.e_t1 * out.e_t1, 0.0) / n);
  const double dbar = sum_d / n;
  out.wald_residual = dbar;
  out.wald_se = std::sqrt(std::max(sum_d2 / n - dbar * dbar, 0.0) / n);
  return out;
}

OccupationConstant occupation_constant_cx(const ModelSpec& model, int x,
                                          double precision) {
  if (!model.single_catalyst())
    throw ValidationError("occupation_constant_cx: single catalyst required");
  const StepLaw& walk = model.walk;
  const double m = model.sole_offspring().mean();
  Rng probe_rng(0);
  const double r = solve_malthusian(model, probe_rng);
  const int d = walk.period();
  const int rel = x - model.catalysts[0];
  const int horizon =
      static_cast<int>(std::ceil(std::log(1.0 / precision) / r)) +
      std::abs(rel) + 50;
  KilledWalkDp dp(walk, horizon);
  const double disc = std::exp(-r);
  double w = 1.0;
  double series = 0.0;          // sum e^{-rk} P(tau >= k, S_k = rel)
  double tau_mean = 0.0;        // sum k e^{-rk} u_k
  int residue = -1;
  OccupationConstant out;
  for (int k = 1; k <= horizon; ++k) {
    const double u = dp.step();
    w *= disc;
    tau_mean += static_cast<double>(k) * w * u;
    const double occ = (rel == 0) ? u : dp.alive_at(rel);
    if (occ > 0.0) {
      if (residue < 0) residue = k % d;
      else if (residue != k % d)
        throw ConvergenceError(
            "occupation_constant_cx: site occupied on two residues; period "
            "detection inconsistent");
      series += w * occ;
    }
  }
  const double alive = dp.alive_mass();
  const double tail_geo = alive * w * disc / (1.0 - disc);
  const double tail_tau =
      alive * w * disc * (horizon + 1 + disc / (1.0 - disc)) / (1.0 - disc);
  if (residue < 0) {
    out.reachable = false;
    out.residue = -1;
    return out;
  }
  const double mu_hat = m * tau_mean;  // mean of the discounted return law
  out.series_value = d * series;
  out.renewal_value = d * m * series / mu_hat;
  out.residue = residue;
  // Conservative: geometric tail on the series plus the mu_hat truncation
  // propagated through the quotient.
  out.tail_bound = d * tail_geo +
                   out.renewal_value * (m * tail_tau) / mu_hat;
  return out;
}

double CStarSet::pick(CStarVariant v) const {
  switch (v) {
    case CStarVariant::kSeries: return series;
    case CStarVariant::kClosedA: return closed_a;
    case CStarVariant::kClosedB: return closed_b;
    case CStarVariant::kRenewal: return renewal;
  }
  return 0.0;
}

CStarSet c_star_set(double c0_series, double c0_renewal, double m, double t0,
                    double e_h1) {
  if (!(e_h1 > 0.0)) throw ValidationError("c_star_set: E[H1] must be > 0");
  CStarSet out;
  const double a = std::exp(-t0);
  double acc = 0.0;
  double term_w = 1.0;
  for (int j = 1; j < 100000; ++j) {
    term_w *= a;
    const double term = term_w * (1.0 - a) * j / e_h1;
    acc += term;
    if (term < 1e-17 * std::max(acc, 1e-300)) break;
  }
  out.series = c0_series * m * acc;
  out.closed_a = c0_series * m * a / ((1.0 - a) * e_h1);
  out.closed_b = c0_series * m * a * a / ((1.0 - a) * e_h1);
  out.renewal = c0_renewal * m * a / ((1.0 - a) * e_h1);
  return out;
}

DerivedParams derive_params(const ModelSpec& model, const DeriveOptions& opts,
                            Rng& rng) {
  if (!model.single_catalyst())
    throw ValidationError(
        "derive_params: single catalyst required (use the multi-catalyst "
        "pipeline otherwise)");
  DerivedParams out;
  out.m = model.sole_offspring().mean();
  out.period = model.walk.period();
  out.q_esc = escape_probability(model.walk, opts.escape_cap,
                                 opts.escape_samples, rng);
  out.r = solve_malthusian(model, rng);
  const auto lap = laplace_tau(model.walk, out.r, opts.precision);
  out.laplace_value = lap.value;
  out.malthus_residual = std::abs(out.m * lap.value - 1.0);
  out.t0 = solve_t0(model.walk, out.r);
  out.alpha = out.r / out.t0;
  const auto occ0 = occupation_constant_cx(model, model.catalysts[0],
                                           opts.precision);
  out.c0_series = static_cast<double>(out.period) / out.m;
  out.c0_renewal = occ0.renewal_value;
  out.tau_discounted_mean = out.c0_series / std::max(out.c0_renewal, 1e-300);
  out.extinction_s =
      extinction_fixed_point(model.sole_offspring(), out.q_esc.value);
  out.survival = 1.0 - out.extinction_s;

  const auto& steps = model.walk.steps();
  const bool nn_symmetric =
      steps.size() <= 3 && model.walk.min_step() == -1 &&
      model.walk.max_step() == 1 &&
      std::abs(steps.front().second - steps.back().second) <= 1e-15;
  if (nn_symmetric) {
    out.phi = std::make_shared<PhiFunction>(
        PhiFunction::closed_form(out.t0, model.catalysts[0]));
  } else {
    out.phi = std::make_shared<PhiFunction>(
        PhiFunction::table(model.walk, out.r, model.catalysts, {1.0},
                           opts.phi_x_max));
  }

  if (out.period == 1 && opts.want_ladder) {
    const StepLaw tilted = model.walk.tilt(out.t0);
    out.ladder = ladder_statistics(tilted, opts.ladder_samples, rng);
    out.c_star = c_star_set(out.c0_series, out.c0_renewal, out.m, out.t0,
                            out.ladder->e_h1);
  }

  out.tags["r"] = {"dp-bisection", 1e-8};
  out.tags["t0"] = {"dp-bisection", 1e-9};
  out.tags["alpha"] = {"dp-bisection", 1e-8};
  out.tags["laplace_value"] = {"dp", lap.error_bound};
  out.tags["c0_series"] = {"closed-form", 0.0};
  out.tags["c0_renewal"] = {"dp", occ0.tail_bound};
  out.tags["q_esc"] = {out.q_esc.exact ? "closed-form" : "mc",
                       out.q_esc.ci_half};
  out.tags["extinction_s"] = {out.q_esc.exact ? "dp-bisection" : "mc", 1e-12};
  if (out.ladder) {
    out.tags["e_h1"] = {"mc", 1.96 * out.ladder->se_h1};
    out.tags["e_t1"] = {"mc", 1.96 * out.ladder->se_t1};
  }
  return out;
}

std::vector<std::string> DerivedParams::manifest_lines() const {
  std::vector<std::string> lines;
  const auto put = [&](const std::string& key, double value) {
    std::string line = key + " = " + fmt(value);
    const auto it = tags.find(key);
    if (it != tags.end())
      line += " | method=" + it->second.method +
              " | error=" + fmt(it->second.error_bound);
    lines.push_back(line);
  };
  put("m", m);
  lines.push_back("period = " + std::to_string(period));
  put("r", r);
  put("t0", t0);
  put("alpha", alpha);
  put("laplace_value", laplace_value);
  put("malthus_residual", malthus_residual);
  put("tau_discounted_mean", tau_discounted_mean);
  put("c0_series", c0_series);
  put("c0_renewal", c0_renewal);
  put("q_esc", q_esc.value);
  put("extinction_s", extinction_s);
  put("survival", survival);
  if (ladder) {
    put("e_h1", ladder->e_h1);
    put("e_t1", ladder->e_t1);
    lines.push_back("e_s1 = " + fmt(ladder->e_s1) + " | method=closed-form | error=0");
    lines.push_back("wald_residual = " + fmt(ladder->wald_residual) +
                    " | method=mc | error=" + fmt(1.96 * ladder->wald_se));
  }
  if (c_star) {
    lines.push_back("c_star_series = " + fmt(c_star->series));
    lines.push_back("c_star_closed_a = " + fmt(c_star->closed_a));
    lines.push_back("c_star_closed_b = " + fmt(c_star->closed_b));
    lines.push_back("c_star_renewal = " + fmt(c_star->renewal));
  }
  if (phi) {
    lines.push_back(std::string("phi_form = ") +
                    (phi->is_closed_form() ? "closed-form" : "dp") +
                    " | error=" + fmt(phi->error_bound()));
  }
  return lines;
}

}  // namespace cbrw
