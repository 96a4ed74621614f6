#include "cbrw/multi_catalyst.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>

#include "cbrw/engine.hpp"
#include "cbrw/errors.hpp"

namespace cbrw {

namespace {

// Strong connectivity of the nonzero pattern by double reachability sweep.
bool irreducible_pattern(const std::vector<std::vector<double>>& a,
                         double floor) {
  const std::size_t n = a.size();
  if (n == 0) return false;
  auto reach = [&](bool transpose) {
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack = {0};
    seen[0] = 1;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < n; ++j) {
        const double e = transpose ? a[j][i] : a[i][j];
        if (!seen[j] && e > floor) {
          seen[j] = 1;
          stack.push_back(j);
        }
      }
    }
    return std::count(seen.begin(), seen.end(), 1) == static_cast<long>(n);
  };
  return reach(false) && reach(true);
}

}  // namespace

double CatalystMatrix::row_sum(std::size_t i) const {
  return std::accumulate(entries[i].begin(), entries[i].end(), 0.0);
}

CatalystMatrix estimate_Mr(const ModelSpec& model, double r,
                           double precision) {
  if (!(r > 0.0)) throw ValidationError("estimate_Mr: r must be > 0");
  if (!(precision > 0.0))
    throw ValidationError("estimate_Mr: precision must be > 0");
  CatalystMatrix out;
  out.sites = model.catalysts;
  out.r = r;
  const std::size_t nc = out.sites.size();
  out.entries.assign(nc, std::vector<double>(nc, 0.0));
  out.row_tail.assign(nc, 0.0);

  // Horizon such that undiscovered mass is worth less than the precision.
  const int horizon =
      static_cast<int>(std::ceil(std::log(1.0 / precision) / r)) + 1;
  const int lo = out.sites.front() + horizon * model.walk.min_step();
  const int hi = out.sites.back() + horizon * model.walk.max_step();
  const std::size_t width = static_cast<std::size_t>(hi - lo) + 1;
  if (static_cast<double>(width) * nc > 5e8)
    throw MemoryBudgetError("estimate_Mr: window exceeds the budget");

  std::vector<double> cur(width), nxt(width);
  for (std::size_t i = 0; i < nc; ++i) {
    std::fill(cur.begin(), cur.end(), 0.0);
    cur[static_cast<std::size_t>(out.sites[i] - lo)] = 1.0;
    double live = 1.0;
    int t = 0;
    while (t < horizon && live * std::exp(-r * t) > precision) {
      ++t;
      std::fill(nxt.begin(), nxt.end(), 0.0);
      for (int x = lo; x <= hi; ++x) {
        const double v = cur[static_cast<std::size_t>(x - lo)];
        if (v == 0.0) continue;
        for (const auto& [s, p] : model.walk.steps()) {
          const int y = x + s;
          if (y < lo || y > hi) continue;
          nxt[static_cast<std::size_t>(y - lo)] += v * p;
        }
      }
      // Absorb the mass that landed on the set.
      const double disc = std::exp(-r * t);
      for (std::size_t j = 0; j < nc; ++j) {
        double& mass = nxt[static_cast<std::size_t>(out.sites[j] - lo)];
        if (mass > 0.0) {
          out.entries[i][j] += disc * mass;
          live -= mass;
          mass = 0.0;
        }
      }
      cur.swap(nxt);
    }
    const double m1 = model.m1(out.sites[i]);
    for (std::size_t j = 0; j < nc; ++j) out.entries[i][j] *= m1;
    out.row_tail[i] = m1 * std::max(0.0, live) * std::exp(-r * t);
  }
  if (!irreducible_pattern(out.entries, 0.0))
    throw ReducibleMatrixError("estimate_Mr: catalyst pattern is reducible");
  return out;
}

PerronData perron(const CatalystMatrix& matrix, double tol, int max_iter) {
  const std::size_t n = matrix.entries.size();
  if (n == 0) throw ValidationError("perron: empty matrix");
  for (const auto& row : matrix.entries) {
    if (row.size() != n) throw ValidationError("perron: matrix not square");
    for (double e : row)
      if (e < 0.0) throw ValidationError("perron: negative entry");
  }
  if (!irreducible_pattern(matrix.entries, 0.0))
    throw ReducibleMatrixError("perron: reducible pattern");

  // Positive diagonal shift makes the iteration primitive.
  double top = 0.0;
  for (const auto& row : matrix.entries)
    for (double e : row) top = std::max(top, e);
  const double shift = std::max(top, 1e-12);

  PerronData out;
  std::vector<double> v(n, 1.0), w(n, 0.0);
  double rho = 0.0;
  int it = 0;
  for (; it < max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = shift * v[i];
      for (std::size_t j = 0; j < n; ++j) s += matrix.entries[i][j] * v[j];
      w[i] = s;
    }
    const double norm = *std::max_element(w.begin(), w.end());
    for (double& x : w) x /= norm;
    rho = norm - shift;
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      delta = std::max(delta, std::abs(w[i] - v[i]));
    v.swap(w);
    if (delta < tol * 0.01) break;
  }
  if (it == max_iter) throw ConvergenceError("perron: no convergence");

  // Tighten rho with a Rayleigh quotient, then report the true residual.
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double mv = 0.0;
    for (std::size_t j = 0; j < n; ++j) mv += matrix.entries[i][j] * v[j];
    num += v[i] * mv;
    den += v[i] * v[i];
    w[i] = mv;
  }
  rho = num / den;
  out.residual = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    out.residual = std::max(out.residual, std::abs(w[i] - rho * v[i]));
  const double scale = v[0];
  if (!(scale > 0.0))
    throw ReducibleMatrixError("perron: eigenvector not strictly positive");
  for (double& x : v) {
    x /= scale;
    if (!(x > 0.0))
      throw ReducibleMatrixError("perron: eigenvector not strictly positive");
  }
  out.rho = rho;
  out.v = std::move(v);
  out.iterations = it + 1;
  return out;
}

MultiCalibration solve_malthusian_multi(const ModelSpec& model,
                                        double precision, double r_floor) {
  if (!(precision > 0.0) || !(r_floor > 0.0))
    throw ValidationError("solve_malthusian_multi: bad tolerances");
  const double entry_prec = 1e-13;
  auto rho_at = [&](double r) {
    return perron(estimate_Mr(model, r, entry_prec)).rho;
  };
  double lo = r_floor;
  if (rho_at(lo) <= 1.0)
    throw SubcriticalModelError(
        "solve_malthusian_multi: Perron root at the floor rate is <= 1");
  double hi = std::max(0.1, 2.0 * r_floor);
  while (rho_at(hi) > 1.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 64.0)
      throw ConvergenceError("solve_malthusian_multi: no finite bracket");
  }
  while (hi - lo > precision) {
    const double mid = 0.5 * (lo + hi);
    (rho_at(mid) > 1.0 ? lo : hi) = mid;
  }
  MultiCalibration out;
  out.r = 0.5 * (lo + hi);
  out.matrix = estimate_Mr(model, out.r, entry_prec);
  out.eig = perron(out.matrix);
  out.rho_residual = std::abs(out.eig.rho - 1.0);
  out.t0 = solve_t0(model.walk, out.r);
  out.alpha = out.r / out.t0;
  return out;
}

std::shared_ptr<PhiFunction> phi_multi(const ModelSpec& model, double r,
                                       const std::vector<double>& v,
                                       int x_max) {
  if (v.size() != model.catalysts.size())
    throw ValidationError("phi_multi: eigenvector size mismatch");
  for (double x : v)
    if (!(x > 0.0)) throw ValidationError("phi_multi: v must be positive");
  return std::make_shared<PhiFunction>(
      PhiFunction::table(model.walk, r, model.catalysts, v, x_max));
}

MultiLlnCheck lln_check_multi(const ModelSpec& model,
                              const MultiCalibration& calib, int n_max,
                              long replicas, std::uint64_t seed, int threads,
                              double cap) {
  const int span = std::max(std::abs(model.catalysts.front()),
                            std::abs(model.catalysts.back()));
  const auto phi = phi_multi(model, calib.r, calib.eig.v, span + 64);
  EnsembleSpec spec;
  spec.times = {n_max};
  spec.replicas = replicas;
  spec.seed = seed;
  spec.cap = cap;
  spec.threads = threads;
  const auto res = run_ensemble(model, *phi, calib.r, spec);

  MultiLlnCheck out;
  out.n = n_max;
  out.alpha = calib.alpha;
  out.lambda_ref = (*phi)(model.initial_position);
  std::vector<double> speeds;
  speeds.reserve(static_cast<std::size_t>(replicas));
  double lsum = 0.0, lsq = 0.0;
  // The rightmost catalyst seeds the front, so M_n carries a flat
  // +catalysts.back() offset at finite n; measure travel beyond it.
  const double frontier = static_cast<double>(model.catalysts.back());
  for (long rep = 0; rep < replicas; ++rep) {
    const auto& rec = res.at(rep, 0);
    lsum += rec.lambda_n;
    lsq += rec.lambda_n * rec.lambda_n;
    if (rec.survived) speeds.push_back((rec.m_n - frontier) / rec.n);
  }
  out.survivors = static_cast<long>(speeds.size());
  if (!speeds.empty()) {
    auto mid = speeds.begin() + speeds.size() / 2;
    std::nth_element(speeds.begin(), mid, speeds.end());
    out.median_speed = *mid;
    out.gap = std::abs(out.median_speed - out.alpha);
  }
  const double nr = static_cast<double>(replicas);
  out.lambda_mean = lsum / nr;
  const double var = (lsq - nr * out.lambda_mean * out.lambda_mean) / (nr - 1.0);
  out.lambda_se = std::sqrt(std::max(0.0, var) / nr);
  return out;
}

}  // namespace cbrw
