#include "cbrw/expectation_dp.hpp"

#include <cmath>

#include "cbrw/errors.hpp"

namespace cbrw {

namespace {
constexpr double kEntryBudget = 1e8;
}

ExpectationTable::ExpectationTable(const ModelSpec& model, int n_max) {
  if (n_max < 0) throw ValidationError("expectation table: n_max < 0");
  n_max_ = n_max;
  const int x0 = model.initial_position;
  const int lo = x0 + n_max * model.walk.min_step();
  const int hi = x0 + n_max * model.walk.max_step();
  const std::size_t width = static_cast<std::size_t>(hi - lo) + 1;
  const double entries =
      static_cast<double>(width) * (static_cast<double>(n_max) + 1.0);
  if (entries > kEntryBudget)
    throw MemoryBudgetError("expectation table: " + std::to_string(entries) +
                            " entries exceed the budget");
  lo_ = lo;
  rows_.assign(static_cast<std::size_t>(n_max) + 1,
               std::vector<double>(width, 0.0));
  rows_[0][static_cast<std::size_t>(x0 - lo)] = 1.0;
  for (int k = 0; k < n_max; ++k) {
    const auto& cur = rows_[static_cast<std::size_t>(k)];
    auto& nxt = rows_[static_cast<std::size_t>(k) + 1];
    for (std::size_t i = 0; i < width; ++i) {
      const double v = cur[i];
      if (v == 0.0) continue;
      const int x = lo_ + static_cast<int>(i);
      const double w = v * model.m1(x);
      for (const auto& [s, p] : model.walk.steps()) {
        const long j = static_cast<long>(i) + s;
        if (j >= 0 && j < static_cast<long>(width))
          nxt[static_cast<std::size_t>(j)] += w * p;
      }
    }
  }
}

double ExpectationTable::at(int k, int x) const {
  if (k < 0 || k > n_max_) throw ValidationError("expectation table: bad k");
  const auto& row = rows_[static_cast<std::size_t>(k)];
  const long i = static_cast<long>(x) - lo_;
  if (i < 0 || i >= static_cast<long>(row.size())) return 0.0;
  return row[static_cast<std::size_t>(i)];
}

double ExpectationTable::total(int k) const {
  if (k < 0 || k > n_max_) throw ValidationError("expectation table: bad k");
  double s = 0.0;
  for (double v : rows_[static_cast<std::size_t>(k)]) s += v;
  return s;
}

double ExpectationTable::tail_sum(int k, int x_from) const {
  if (k < 0 || k > n_max_) throw ValidationError("expectation table: bad k");
  const auto& row = rows_[static_cast<std::size_t>(k)];
  double s = 0.0;
  for (long i = static_cast<long>(row.size()) - 1; i >= 0; --i) {
    if (lo_ + static_cast<int>(i) < x_from) break;
    s += row[static_cast<std::size_t>(i)];
  }
  return s;
}

double ExpectationTable::weighted(int k,
                                 const std::function<double(int)>& f) const {
  if (k < 0 || k > n_max_) throw ValidationError("expectation table: bad k");
  const auto& row = rows_[static_cast<std::size_t>(k)];
  double s = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i)
    if (row[i] != 0.0) s += row[i] * f(lo_ + static_cast<int>(i));
  return s;
}

double ExpectationTable::martingale_mean(int k, const PhiFunction& phi,
                                         double r) const {
  return std::exp(-r * k) *
         weighted(k, [&](int x) { return phi(x); });
}

double weighted_walk_expectation(const ModelSpec& model, int n,
                                 const std::function<double(int)>& f) {
  if (n < 0) throw ValidationError("weighted_walk_expectation: n < 0");
  const int x0 = model.initial_position;
  const int lo = x0 + n * model.walk.min_step();
  const int hi = x0 + n * model.walk.max_step();
  const std::size_t width = static_cast<std::size_t>(hi - lo) + 1;
  if (static_cast<double>(width) > kEntryBudget)
    throw MemoryBudgetError("weighted_walk_expectation: window too wide");
  std::vector<double> g(width), nxt(width, 0.0);
  for (std::size_t i = 0; i < width; ++i) g[i] = f(lo + static_cast<int>(i));
  for (int t = 1; t <= n; ++t) {
    // After t gathers the value at x equals E_x[f(S_{remaining}) ...]; only
    // sites reachable backward from x0 in n - t steps matter.
    const int xlo = x0 + (n - t) * model.walk.min_step();
    const int xhi = x0 + (n - t) * model.walk.max_step();
    for (int x = xlo; x <= xhi; ++x) {
      double acc = 0.0;
      for (const auto& [s, p] : model.walk.steps())
        acc += p * g[static_cast<std::size_t>(x + s - lo)];
      nxt[static_cast<std::size_t>(x - lo)] = model.m1(x) * acc;
    }
    for (int x = xlo; x <= xhi; ++x)
      g[static_cast<std::size_t>(x - lo)] = nxt[static_cast<std::size_t>(x - lo)];
  }
  return g[static_cast<std::size_t>(x0 - lo)];
}

ProfileFit occupation_profile_fit(const ExpectationTable& table,
                                  const ModelSpec& model, double r, int n,
                                  int abs_min, int abs_max) {
  if (abs_min < 1 || abs_max <= abs_min)
    throw ValidationError("profile fit: bad |x| range");
  const double scale = -r * n;
  ProfileFit fit;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::vector<std::pair<double, double>> pts;
  for (int a = abs_min; a <= abs_max; ++a) {
    for (int sgn : {-1, 1}) {
      const int x = model.catalysts.front() + sgn * a;
      const double v = table.at(n, x);
      if (v <= 0.0) continue;
      const double lx = static_cast<double>(a);
      const double ly = std::log(v) + scale;
      pts.emplace_back(lx, ly);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
  }
  fit.points = static_cast<int>(pts.size());
  if (fit.points < 2)
    throw ValidationError("profile fit: fewer than two occupied sites");
  const double np = static_cast<double>(fit.points);
  const double det = np * sxx - sx * sx;
  fit.slope = (np * sxy - sx * sy) / det;
  fit.intercept = (sy - fit.slope * sx) / np;
  double ss = 0.0;
  for (const auto& [lx, ly] : pts) {
    const double e = ly - (fit.intercept + fit.slope * lx);
    ss += e * e;
  }
  fit.rms_residual = std::sqrt(ss / np);
  return fit;
}

}  // namespace cbrw
