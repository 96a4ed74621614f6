#include "cbrw/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "cbrw/errors.hpp"
#include "cbrw/population.hpp"
#include "cbrw/rng.hpp"

namespace cbrw {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_times(const std::vector<int>& times) {
  if (times.empty()) throw ValidationError("ensemble: no record times");
  int prev = 0;
  for (int t : times) {
    if (t <= prev)
      throw ValidationError("ensemble: record times must be ascending and >= 1");
    prev = t;
  }
}

void run_one(const ModelSpec& model, const PhiFunction& phi, double r,
             const std::vector<int>& times, double cap, long replica,
             std::uint64_t seed, RunRecord* out) {
  Rng rng(seed, static_cast<std::uint64_t>(replica) + 1);
  PopulationState state(model.initial_position);
  bool capped = false;
  int last_catalyst_gen = 0;  // generation of the latest catalyst visit
  std::size_t next = 0;
  for (int gen = 1; gen <= times.back(); ++gen) {
    const auto step = step_population(state, model, cap, rng);
    capped = capped || step.capped;
    for (int c : model.catalysts)
      if (state.count_at(c) > 0.0) {
        last_catalyst_gen = gen;
        break;
      }
    if (gen == times[next]) {
      RunRecord& rec = out[next];
      rec.replica = replica;
      rec.n = gen;
      rec.capped = capped;
      rec.total = state.total();
      // A line without recent catalyst visits no longer branches; treat it
      // as extinct for conditioning even if particles are still drifting.
      const int window = std::max(20, gen / 10);
      rec.survived = state.alive() && gen - last_catalyst_gen <= window;
      if (state.alive()) {
        rec.m_n = state.max_occupied();
        rec.eta0 = state.count_at(model.catalysts.front());
        double lam = 0.0;
        for (const auto& [x, c] : state.occupied()) lam += phi(x) * c;
        rec.lambda_n = std::exp(-r * gen) * lam;
      } else {
        rec.m_n = kNegInf;
        rec.eta0 = 0.0;
        rec.lambda_n = 0.0;
      }
      ++next;
      if (next == times.size()) break;
    }
  }
}

}  // namespace

EnsembleResult run_ensemble(const ModelSpec& model, const PhiFunction& phi,
                            double r, const EnsembleSpec& spec) {
  check_times(spec.times);
  if (spec.replicas <= 0) throw ValidationError("ensemble: replicas must be > 0");
  const int threads = std::max(spec.threads, 1);
  EnsembleResult res;
  res.n_times = spec.times.size();
  res.replicas = spec.replicas;
  res.records.assign(static_cast<std::size_t>(spec.replicas) * res.n_times,
                     RunRecord{});
  const auto worker = [&](int tid) {
    for (long rep = tid; rep < spec.replicas; rep += threads)
      run_one(model, phi, r, spec.times, spec.cap, rep, spec.seed,
              &res.records[static_cast<std::size_t>(rep) * res.n_times]);
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  for (long rep = 0; rep < spec.replicas; ++rep) {
    const RunRecord& last = res.at(rep, res.n_times - 1);
    if (last.survived) ++res.survivors_final;
    if (last.capped) ++res.capped_runs;
  }
  return res;
}

LlnSummary summarize_lln(const EnsembleResult& res, std::size_t time_index,
                         double r) {
  if (time_index >= res.n_times)
    throw ValidationError("summarize_lln: time index out of range");
  LlnSummary s;
  s.n = res.at(0, time_index).n;
  double sum_v = 0.0, sum_v2 = 0.0;
  double sum_l = 0.0, sum_l2 = 0.0;
  double sum_e = 0.0, sum_e2 = 0.0;
  const double scale = std::exp(-r * s.n);
  for (long rep = 0; rep < res.replicas; ++rep) {
    const RunRecord& rec = res.at(rep, time_index);
    sum_l += rec.lambda_n;
    sum_l2 += rec.lambda_n * rec.lambda_n;
    const double e = scale * rec.eta0;
    sum_e += e;
    sum_e2 += e * e;
    if (rec.survived) {
      ++s.survivors;
      const double v = rec.m_n / static_cast<double>(s.n);
      sum_v += v;
      sum_v2 += v * v;
    }
  }
  const double nrep = static_cast<double>(res.replicas);
  s.survival_rate = static_cast<double>(s.survivors) / nrep;
  s.se_survival =
      std::sqrt(std::max(s.survival_rate * (1.0 - s.survival_rate), 0.0) / nrep);
  s.mean_lambda = sum_l / nrep;
  s.se_lambda = std::sqrt(
      std::max(sum_l2 / nrep - s.mean_lambda * s.mean_lambda, 0.0) / nrep);
  s.mean_eta0_scaled = sum_e / nrep;
  s.se_eta0_scaled = std::sqrt(
      std::max(sum_e2 / nrep - s.mean_eta0_scaled * s.mean_eta0_scaled, 0.0) /
      nrep);
  if (s.survivors > 0) {
    const double ns = static_cast<double>(s.survivors);
    s.mean_speed = sum_v / ns;
    s.se_speed = std::sqrt(
        std::max(sum_v2 / ns - s.mean_speed * s.mean_speed, 0.0) / ns);
  }
  return s;
}

FluctuationResult fluctuation_experiment(const ModelSpec& model,
                                         const DerivedParams& params,
                                         const FluctuationSpec& spec) {
  if (spec.n_list.empty() || spec.y_list.empty())
    throw ValidationError("fluctuation: empty n or y grid");
  if (!params.c_star.has_value())
    throw ValidationError(
        "fluctuation: the walk is periodic; the exceedance constants are "
        "undefined");
  std::vector<int> times;
  for (int n : spec.n_list) {
    if (n < 2) throw ValidationError("fluctuation: n must be >= 2");
    times.push_back(n / 2);
    times.push_back(n);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  const auto index_of = [&](int t) {
    return static_cast<std::size_t>(
        std::lower_bound(times.begin(), times.end(), t) - times.begin());
  };

  EnsembleSpec es;
  es.times = times;
  es.replicas = spec.replicas;
  es.seed = spec.seed;
  es.cap = spec.cap;
  es.threads = spec.threads;
  const auto res = run_ensemble(model, *params.phi, params.r, es);

  FluctuationResult out;
  out.survivors_final = res.survivors_final;
  out.capped_runs = res.capped_runs;
  const auto& cs = *params.c_star;
  const double t0 = params.t0;
  const double alpha = params.alpha;
  if (!spec.intensities.empty() &&
      (spec.intensities.size() != spec.n_list.size() ||
       spec.intensities[0].size() != spec.y_list.size()))
    throw ValidationError("fluctuation: intensity grid shape mismatch");
  double w_sum = 0.0;
  long w_cnt = 0;
  for (std::size_t index_n = 0; index_n < spec.n_list.size(); ++index_n) {
    const int n = spec.n_list[index_n];
    const std::size_t ih = index_of(n / 2);
    const std::size_t in = index_of(n);
    for (std::size_t iy = 0; iy < spec.y_list.size(); ++iy) {
      const double y = spec.y_list[iy];
      const double an = alpha * static_cast<double>(n);
      const double xy = std::floor(an + y) + 1.0;  // smallest integer > an + y
      // Lattice-corrected model decay e^{-t0 y} e^{t0 {an + y}}.
      const double decay = std::exp(-t0 * (std::floor(an + y) - an));
      const double intensity =
          spec.intensities.empty() ? -1.0 : spec.intensities[index_n][iy];
      TailRow row;
      row.n = n;
      row.y = y;
      double hits = 0.0;
      double sa = 0.0, sb = 0.0, ss = 0.0, sr = 0.0, sr2 = 0.0, sd = 0.0;
      for (long rep = 0; rep < res.replicas; ++rep) {
        const double w = res.at(rep, ih).lambda_n;
        if (res.at(rep, in).m_n >= xy) hits += 1.0;
        sa += 1.0 - std::exp(-cs.closed_a * w * decay);
        sb += 1.0 - std::exp(-cs.closed_b * w * decay);
        ss += 1.0 - std::exp(-cs.series * w * decay);
        const double hr = 1.0 - std::exp(-cs.renewal * w * decay);
        sr += hr;
        sr2 += hr * hr;
        if (intensity >= 0.0) sd += 1.0 - std::exp(-intensity * w);
      }
      const double nrep = static_cast<double>(res.replicas);
      row.p_emp = hits / nrep;
      row.se = std::sqrt(std::max(row.p_emp * (1.0 - row.p_emp), 0.0) / nrep);
      row.p_a = sa / nrep;
      row.p_b = sb / nrep;
      row.p_series = ss / nrep;
      row.p_renewal = sr / nrep;
      row.p_dp = intensity >= 0.0 ? sd / nrep : 0.0;
      row.se_model =
          std::sqrt(std::max(sr2 / nrep - row.p_renewal * row.p_renewal, 0.0) /
                    nrep);
      out.rows.push_back(row);
      out.sup_gap_a = std::max(out.sup_gap_a, std::abs(row.p_emp - row.p_a));
      out.sup_gap_b = std::max(out.sup_gap_b, std::abs(row.p_emp - row.p_b));
      out.sup_gap_series =
          std::max(out.sup_gap_series, std::abs(row.p_emp - row.p_series));
      out.sup_gap_renewal =
          std::max(out.sup_gap_renewal, std::abs(row.p_emp - row.p_renewal));
      if (intensity >= 0.0)
        out.sup_gap_dp = std::max(out.sup_gap_dp, std::abs(row.p_emp - row.p_dp));
    }
    for (long rep = 0; rep < res.replicas; ++rep) {
      w_sum += res.at(rep, ih).lambda_n;
      ++w_cnt;
    }
  }
  out.mean_w_proxy = w_sum / static_cast<double>(std::max(w_cnt, 1L));
  return out;
}

}  // namespace cbrw
