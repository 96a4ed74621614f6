#include "cbrw/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>

#include "cbrw/errors.hpp"
#include "cbrw/expectation_dp.hpp"
#include "cbrw/multi_catalyst.hpp"
#include "cbrw/report.hpp"
#include "cbrw/rng.hpp"
#include "cbrw/spine.hpp"

namespace cbrw {
namespace {

struct CheckLog {
  std::ostream& os;
  std::vector<VerifyRow> rows;
  int failures = 0;

  // Records and prints one pass/fail check; the row's diff and tolerance
  // carry the error-bound column of verify.csv.
  bool add(const std::string& name, int n, double lhs, double rhs, double tol) {
    VerifyRow row = VerifyRow::make(name, n, lhs, rhs, tol);
    rows.push_back(row);
    if (!row.pass) ++failures;
    os << "check " << name << (n > 0 ? " n=" + std::to_string(n) : "") << ": "
       << (row.pass ? "pass" : "FAIL") << "  lhs=" << csv_num(lhs)
       << " rhs=" << csv_num(rhs) << " tol=" << csv_num(tol) << "\n";
    return row.pass;
  }

  void skip(const std::string& name, const std::string& why) {
    os << "check " << name << ": skip (" << why << ")\n";
  }
};

std::string hex_hash(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> manifest_header(const ExperimentConfig& cfg) {
  std::vector<std::string> lines;
  lines.push_back("tool = cbrw 0.1.0");
  lines.push_back("kind = " + run_kind_name(cfg.kind));
  lines.push_back("config_hash = " + hex_hash(config_hash(cfg)));
  lines.push_back("seed = " + std::to_string(cfg.seed));
  lines.push_back("replicas = " + std::to_string(cfg.replicas));
  lines.push_back("n_max = " + std::to_string(cfg.n_max));
  lines.push_back("threads = " + std::to_string(cfg.threads));
  lines.push_back("cap = " + csv_num(cfg.cap));
  return lines;
}

// The wall-time line is last so everything above it is reproducible text.
void write_manifest(const std::string& out_dir, std::vector<std::string> lines,
                    double wall_seconds) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "wall_seconds = %.3f", wall_seconds);
  lines.push_back(buf);
  std::string text;
  for (const std::string& line : lines) {
    text += line;
    text += '\n';
  }
  write_text_file(out_dir + "/manifest.txt", text);
}

std::vector<int> default_times(const ExperimentConfig& cfg) {
  if (!cfg.times.empty()) return cfg.times;
  std::vector<int> times;
  int points = std::min(8, cfg.n_max);
  for (int i = 1; i <= points; ++i) {
    int t = static_cast<int>(std::lround(
        static_cast<double>(i) * cfg.n_max / static_cast<double>(points)));
    if (t >= 1 && (times.empty() || t > times.back())) times.push_back(t);
  }
  return times;
}

DerivedParams derive_for(const ExperimentConfig& cfg) {
  if (!cfg.model.single_catalyst())
    throw ValidationError(
        run_kind_name(cfg.kind) +
        ": single-catalyst calibration requested for a multi-catalyst model; "
        "use the multicat experiment");
  DeriveOptions opts;
  Rng rng(cfg.seed, 0);
  return derive_params(cfg.model, opts, rng);
}

// Median M_n/n over surviving replicas, measured beyond the catalyst
// site so off-origin catalysts do not shift the finite-n speed.
double survivor_speed_median(const EnsembleResult& res, std::size_t ti, int n,
                             int frontier) {
  std::vector<double> speeds;
  for (long rep = 0; rep < res.replicas; ++rep) {
    const RunRecord& rec = res.at(rep, ti);
    if (rec.survived && std::isfinite(rec.m_n))
      speeds.push_back((rec.m_n - frontier) / static_cast<double>(n));
  }
  if (speeds.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t mid = speeds.size() / 2;
  std::nth_element(speeds.begin(), speeds.begin() + mid, speeds.end());
  return speeds[mid];
}

int finish(const CheckLog& log, std::ostream& os) {
  if (log.failures == 0) {
    os << "all checks passed\n";
    return 0;
  }
  os << log.failures << " check(s) failed\n";
  return 1;
}

// ---- params ----------------------------------------------------------

int cmd_params(const ExperimentConfig& cfg, std::ostream& os,
               std::vector<std::string>& manifest) {
  DerivedParams params = derive_for(cfg);
  os << "derived constants (" << cfg.model.walk.steps().size()
     << "-point walk, catalyst at " << cfg.model.catalysts[0] << ")\n";
  for (const std::string& line : params.manifest_lines()) {
    os << "  " << line << "\n";
    manifest.push_back(line);
  }
  CheckLog log{os, {}, 0};
  log.add("malthus_residual", 0, params.malthus_residual, 0.0, 1e-8);
  return finish(log, os);
}

// ---- lln -------------------------------------------------------------

int cmd_lln(const ExperimentConfig& cfg, std::ostream& os,
            std::vector<std::string>& manifest) {
  DerivedParams params = derive_for(cfg);
  for (const std::string& line : params.manifest_lines()) manifest.push_back(line);

  const std::vector<int> times = default_times(cfg);
  EnsembleSpec es;
  es.times = times;
  es.replicas = cfg.replicas;
  es.seed = cfg.seed;
  es.cap = cfg.cap;
  es.threads = cfg.threads;
  const EnsembleResult res = run_ensemble(cfg.model, *params.phi, params.r, es);

  std::vector<LlnSummary> summaries;
  for (std::size_t ti = 0; ti < times.size(); ++ti)
    summaries.push_back(summarize_lln(res, ti, params.r));

  write_text_file(cfg.out_dir + "/runs.csv", runs_csv(res, times));
  write_text_file(cfg.out_dir + "/summary.csv", summary_csv(summaries));

  PlotSeries speed{"mean M_n/n (survivors)", {}, "#1f77b4", false};
  PlotSeries med{"median M_n/n", {}, "#2ca02c", false};
  PlotSeries alpha_line{"alpha", {}, "#d62728", true};
  PlotSeries lam{"mean Lambda_n", {}, "#1f77b4", false};
  PlotSeries lam_hi{"mean +/- 2 SE", {}, "#1f77b4", true};
  PlotSeries lam_lo{"", {}, "#1f77b4", true};
  PlotSeries one_line{"reference 1", {}, "#d62728", true};
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    const LlnSummary& s = summaries[ti];
    if (s.survivors > 0) {
      speed.points.emplace_back(s.n, s.mean_speed);
      med.points.emplace_back(
          s.n, survivor_speed_median(res, ti, s.n, cfg.model.catalysts.back()));
    }
    lam.points.emplace_back(s.n, s.mean_lambda);
    lam_hi.points.emplace_back(s.n, s.mean_lambda + 2.0 * s.se_lambda);
    lam_lo.points.emplace_back(s.n, s.mean_lambda - 2.0 * s.se_lambda);
  }
  alpha_line.points = {{static_cast<double>(times.front()), params.alpha},
                       {static_cast<double>(times.back()), params.alpha}};
  one_line.points = {{static_cast<double>(times.front()), 1.0},
                     {static_cast<double>(times.back()), 1.0}};
  write_text_file(cfg.out_dir + "/plots/lln_speed.svg",
                  svg_line_plot("maximum displacement per generation", "n",
                                "M_n / n", {speed, med, alpha_line}));
  write_text_file(cfg.out_dir + "/plots/lambda_band.svg",
                  svg_line_plot("additive martingale mean", "n", "Lambda_n",
                                {lam, lam_hi, lam_lo, one_line}));

  CheckLog log{os, {}, 0};
  os << "survivors at n=" << times.back() << ": " << res.survivors_final << "/"
     << res.replicas << " (capped runs: " << res.capped_runs << ")\n";
  for (const LlnSummary& s : summaries) {
    if (res.capped_runs > 0) {
      log.skip("lambda_mean n=" + std::to_string(s.n),
               "population cap engaged; the martingale read-off is biased low");
      break;
    }
    log.add("lambda_mean", s.n, s.mean_lambda, 1.0,
            std::max(4.0 * s.se_lambda, 0.02));
  }
  const LlnSummary& last = summaries.back();
  // Fixed-point comparison wants the not-yet-annihilated fraction, which
  // approaches 1 - s from above; the windowed survival proxy is for
  // conditioning and sits a few percent below it (dormant lines count as
  // dead there).  The slack absorbs the q_esc half-width on drift walks.
  long alive = 0;
  for (long rep = 0; rep < res.replicas; ++rep)
    if (res.at(rep, times.size() - 1).total > 0.0) ++alive;
  const double alive_rate = static_cast<double>(alive) / res.replicas;
  const double se_alive =
      std::sqrt(std::max(alive_rate * (1.0 - alive_rate), 0.0) / res.replicas);
  log.add("alive_rate_vs_fixed_point", last.n, alive_rate, params.survival,
          4.0 * se_alive + 2.0 * params.q_esc.ci_half + 0.005);
  if (last.survivors > 0) {
    const double median = survivor_speed_median(res, times.size() - 1, last.n,
                                                cfg.model.catalysts.back());
    log.add("median_speed", last.n, median, params.alpha,
            0.02 + 2.0 / static_cast<double>(last.n));
  } else {
    log.skip("median_speed", "no surviving replicas");
  }
  return finish(log, os);
}

// ---- fluctuation -----------------------------------------------------

// Integer exceedance level used by the tail table: smallest integer above
// alpha n + y.  Must match the engine's convention so the DP intensity
// column refers to the same event.
int level_above(double alpha, int n, double y) {
  return static_cast<int>(std::floor(alpha * n + y)) + 1;
}

struct PmfTable {
  int n = 0;
  double s_actual = 0.0;
  std::vector<int> y;
  std::vector<double> p_emp, se_emp, p_model, se_model;
  double emp_mass = 0.0;        // window mass, unconditional
  double model_mass = 0.0;      // window model mass
  double emp_mass_se = 0.0;
  double model_mass_se = 0.0;
  double alive_rate = 0.0;      // fraction with a finite maximum at n
  double full_mass = 0.0;       // tabulated over every observed gap
  int mode_index = -1;
};

// Integer-gap pmf P(M_n - floor(alpha n) = y) on a subsequence with the
// fractional part of alpha n pinned near the configured target, against
// the two-exponential model difference read off the same replicas.
PmfTable pmf_table(const ExperimentConfig& cfg, const DerivedParams& params,
                   int n) {
  const int k = cfg.k_lambda > 0 ? std::min(cfg.k_lambda, n) : n / 2;
  EnsembleSpec es;
  es.times = k < n ? std::vector<int>{k, n} : std::vector<int>{n};
  es.replicas = cfg.replicas;
  es.seed = cfg.seed;
  es.cap = cfg.cap;
  es.threads = cfg.threads;
  const EnsembleResult res = run_ensemble(cfg.model, *params.phi, params.r, es);
  const std::size_t ik = 0;
  const std::size_t in = es.times.size() - 1;

  PmfTable table;
  table.n = n;
  const double an = params.alpha * n;
  const double floor_an = std::floor(an);
  table.s_actual = an - floor_an;
  const double c = params.c_star->renewal;
  const double t0 = params.t0;

  std::vector<double> window_model(static_cast<std::size_t>(res.replicas), 0.0);
  for (int y = cfg.pmf_y_min; y <= cfg.pmf_y_max; ++y) {
    double hits = 0.0, msum = 0.0, msq = 0.0;
    for (long rep = 0; rep < res.replicas; ++rep) {
      const double w = res.at(rep, ik).lambda_n;
      const double m_n = res.at(rep, in).m_n;
      if (std::isfinite(m_n) && m_n - floor_an == static_cast<double>(y))
        hits += 1.0;
      const double hi = std::exp(-c * w * std::exp(-t0 * (y - table.s_actual)));
      const double lo = std::exp(-c * w * std::exp(-t0 * (y - 1 - table.s_actual)));
      const double diff = hi - lo;
      if (diff < -1e-15)
        throw Error("pmf model difference negative; outer exponential not "
                    "monotone in y");
      msum += diff;
      msq += diff * diff;
      window_model[static_cast<std::size_t>(rep)] += diff;
    }
    const double reps = static_cast<double>(res.replicas);
    const double p = hits / reps;
    const double pm = msum / reps;
    table.y.push_back(y);
    table.p_emp.push_back(p);
    table.se_emp.push_back(std::sqrt(std::max(p * (1.0 - p), 0.0) / reps));
    table.p_model.push_back(pm);
    table.se_model.push_back(
        std::sqrt(std::max(msq / reps - pm * pm, 0.0) / reps));
    table.emp_mass += p;
  }
  // Full-support tally: every replica with a finite maximum lands on
  // exactly one integer gap, so the tabulated mass must equal the alive
  // fraction and the survival-conditioned pmf must sum to one.
  {
    std::map<long long, long> tally;
    long alive = 0;
    double wm = 0.0, wm2 = 0.0;
    for (long rep = 0; rep < res.replicas; ++rep) {
      const double m_n = res.at(rep, in).m_n;
      if (std::isfinite(m_n)) {
        ++alive;
        ++tally[static_cast<long long>(m_n - floor_an)];
      }
      const double w = window_model[static_cast<std::size_t>(rep)];
      wm += w;
      wm2 += w * w;
    }
    long total = 0;
    for (const auto& [gap, count] : tally) total += count;
    const double reps = static_cast<double>(res.replicas);
    table.alive_rate = static_cast<double>(alive) / reps;
    table.full_mass = static_cast<double>(total) / reps;
    table.model_mass = wm / reps;
    table.model_mass_se =
        std::sqrt(std::max(wm2 / reps - table.model_mass * table.model_mass, 0.0) / reps);
    table.emp_mass_se =
        std::sqrt(std::max(table.emp_mass * (1.0 - table.emp_mass), 0.0) / reps);
  }
  double best = -1.0;
  for (std::size_t i = 0; i < table.p_emp.size(); ++i) {
    if (table.p_emp[i] > best) {
      best = table.p_emp[i];
      table.mode_index = static_cast<int>(i);
    }
  }
  return table;
}

int cmd_fluctuation(const ExperimentConfig& cfg, std::ostream& os,
                    std::vector<std::string>& manifest) {
  if (cfg.model.walk.period() != 1)
    throw ValidationError(
        "fluctuation: the step law has period " +
        std::to_string(cfg.model.walk.period()) +
        "; the exceedance law assumes an aperiodic walk (d = 1)");
  DerivedParams params = derive_for(cfg);
  for (const std::string& line : params.manifest_lines()) manifest.push_back(line);

  std::vector<int> n_list = cfg.n_list.empty() ? std::vector<int>{cfg.n_max}
                                               : cfg.n_list;
  std::vector<double> y_grid =
      cfg.y_grid.empty() ? std::vector<double>{0.0, 1.0, 2.0, 3.0} : cfg.y_grid;

  // Exact exceedance intensities from the expectation recursion feed the
  // dressing column and the c* adjudication.
  ExpectationTable table(cfg.model, n_list.back());
  std::vector<std::vector<double>> intensities(n_list.size());
  for (std::size_t i = 0; i < n_list.size(); ++i)
    for (double y : y_grid)
      intensities[i].push_back(
          table.tail_sum(n_list[i], level_above(params.alpha, n_list[i], y)));

  FluctuationSpec fs;
  fs.n_list = n_list;
  fs.y_list = y_grid;
  fs.replicas = cfg.replicas;
  fs.seed = cfg.seed;
  fs.cap = cfg.cap;
  fs.threads = cfg.threads;
  fs.intensities = intensities;
  const FluctuationResult res = fluctuation_experiment(cfg.model, params, fs);

  write_text_file(cfg.out_dir + "/tail.csv", tail_csv(res));

  // Deterministic adjudication of the exceedance constant: compare each
  // variant's first-moment prediction c e^{-t0 y} e^{t0 frac(an + y)}
  // against the exact expected count above the level.  The variant whose
  // log-ratio stays nearest 0 is the coherent one.
  const auto& cs = *params.c_star;
  struct Variant {
    const char* name;
    double c;
    double worst = 0.0;
  };
  std::vector<Variant> variants = {{"series", cs.series},
                                   {"closed_a", cs.closed_a},
                                   {"closed_b", cs.closed_b},
                                   {"renewal", cs.renewal}};
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    for (std::size_t j = 0; j < y_grid.size(); ++j) {
      const double an = params.alpha * n_list[i];
      const double decay = std::exp(-params.t0 * (std::floor(an + y_grid[j]) - an));
      for (Variant& v : variants) {
        const double ratio = v.c * decay / intensities[i][j];
        v.worst = std::max(v.worst, std::abs(std::log(ratio)));
      }
    }
  }
  std::sort(variants.begin(), variants.end(),
            [](const Variant& a, const Variant& b) { return a.worst < b.worst; });
  os << "c* variant adjudication (worst |log(prediction / exact intensity)|):\n";
  for (const Variant& v : variants)
    os << "  " << v.name << " (c=" << csv_num(v.c) << "): " << csv_num(v.worst)
       << "\n";
  os << "adjudicated variant: " << variants[0].name << "\n";
  manifest.push_back(std::string("adjudicated_c_star = ") + variants[0].name);

  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const int n = n_list[i];
    PlotSeries emp{"empirical", {}, "#000000", false};
    PlotSeries mr{"model renewal", {}, "#d62728", false};
    PlotSeries ma{"model A", {}, "#1f77b4", true};
    PlotSeries mb{"model B", {}, "#2ca02c", true};
    PlotSeries ms{"model series", {}, "#9467bd", true};
    PlotSeries md{"model dp-dressed", {}, "#ff7f0e", true};
    for (std::size_t j = 0; j < y_grid.size(); ++j) {
      const TailRow& row = res.rows[i * y_grid.size() + j];
      emp.points.emplace_back(row.y, row.p_emp);
      mr.points.emplace_back(row.y, row.p_renewal);
      ma.points.emplace_back(row.y, row.p_a);
      mb.points.emplace_back(row.y, row.p_b);
      ms.points.emplace_back(row.y, row.p_series);
      md.points.emplace_back(row.y, row.p_dp);
    }
    write_text_file(cfg.out_dir + "/plots/tail_n" + std::to_string(n) + ".svg",
                    svg_line_plot("exceedance tail at n = " + std::to_string(n),
                                  "y", "P(M_n > alpha n + y)",
                                  {emp, mr, ma, mb, ms, md}));
  }

  CheckLog log{os, {}, 0};
  os << "survivors at n=" << n_list.back() << ": " << res.survivors_final << "/"
     << cfg.replicas << " (capped runs: " << res.capped_runs << ")\n";
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const int n = n_list[i];
    double uniform_max = 0.0, uniform_arg = 0.0;
    for (std::size_t j = 0; j < y_grid.size(); ++j) {
      const TailRow& row = res.rows[i * y_grid.size() + j];
      const double se = std::hypot(row.se, row.se_model) + 2e-3;
      log.add("tail_renewal_gap y=" + csv_num(row.y), n, row.p_emp,
              row.p_renewal, 3.0 * se);
      const double scaled = std::exp(params.t0 * row.y) * row.p_emp;
      if (scaled > uniform_max) {
        uniform_max = scaled;
        uniform_arg = row.y;
      }
    }
    // Tightness witness: sup_y e^{t0 y} P(M_n - alpha n > y) stays bounded.
    // Reported, not adjudicated; the provable ceiling is c* e^{t0} since the
    // exceedance intensity is at most c* e^{t0} e^{-t0 y} and E[Lambda] = 1.
    const double ceiling = std::exp(params.t0) * params.c_star->renewal;
    os << "uniform-bound sup over grid of e^{t0 y} P_hat: n=" << n << " sup="
       << csv_num(uniform_max) << " at y=" << csv_num(uniform_arg)
       << " (ceiling c* e^{t0} = " << csv_num(ceiling) << ")\n";
    manifest.push_back("uniform_sup_n" + std::to_string(n) + " = " +
                       csv_num(uniform_max));
  }

  if (cfg.subsequence_s >= 0.0) {
    int chosen = -1;
    for (int n : n_list) {
      const double an = params.alpha * n;
      if (std::abs(an - std::floor(an) - cfg.subsequence_s) <= cfg.subsequence_tol) {
        chosen = n;
        break;
      }
    }
    if (chosen < 0)
      throw ValidationError(
          "pmf table: no n in n_list has frac(alpha n) within " +
          csv_num(cfg.subsequence_tol) + " of s = " + csv_num(cfg.subsequence_s));
    PmfTable pmf = pmf_table(cfg, params, chosen);
    os << "integer-gap pmf at n=" << pmf.n
       << " (frac(alpha n)=" << csv_num(pmf.s_actual) << ")\n";
    os << "  y  p_emp  se  p_model  se_model\n";
    std::string csv = "y,p_emp,se,p_model,se_model\n";
    double model_mass = 0.0;
    for (std::size_t i = 0; i < pmf.y.size(); ++i) {
      os << "  " << pmf.y[i] << "  " << csv_num(pmf.p_emp[i]) << "  "
         << csv_num(pmf.se_emp[i]) << "  " << csv_num(pmf.p_model[i]) << "  "
         << csv_num(pmf.se_model[i]) << "\n";
      csv += std::to_string(pmf.y[i]) + ',' + csv_num(pmf.p_emp[i]) + ',' +
             csv_num(pmf.se_emp[i]) + ',' + csv_num(pmf.p_model[i]) + ',' +
             csv_num(pmf.se_model[i]) + '\n';
      model_mass += pmf.p_model[i];
    }
    write_text_file(cfg.out_dir + "/pmf.csv", csv);
    os << "window [" << cfg.pmf_y_min << ", " << cfg.pmf_y_max << "] mass: "
       << csv_num(pmf.emp_mass) << " empirical, " << csv_num(pmf.model_mass)
       << " model; alive fraction " << csv_num(pmf.alive_rate) << "\n";
    log.add("pmf_model_mass", pmf.n, model_mass, std::min(model_mass, 1.0),
            1e-12);
    if (pmf.alive_rate > 0.0) {
      // Bookkeeping identity: each replica alive at n lands on exactly one
      // integer gap, so the pmf conditioned on survival sums to one.
      log.add("pmf_conditioned_mass", pmf.n, pmf.full_mass / pmf.alive_rate,
              1.0, 1e-12);
    } else {
      log.skip("pmf_conditioned_mass", "no replica alive at n");
    }
    log.add("pmf_window_gap", pmf.n, pmf.emp_mass, pmf.model_mass,
            3.0 * std::hypot(pmf.emp_mass_se, pmf.model_mass_se) + 2e-3);
    const int mi = pmf.mode_index;
    const double se =
        std::hypot(pmf.se_emp[mi], pmf.se_model[mi]) + 2e-3;
    log.add("pmf_mode_gap y=" + std::to_string(pmf.y[mi]), pmf.n,
            pmf.p_emp[mi], pmf.p_model[mi], 3.0 * se);
  }
  return finish(log, os);
}

// ---- verify ----------------------------------------------------------

int cmd_verify(const ExperimentConfig& cfg, std::ostream& os,
               std::vector<std::string>& manifest) {
  DerivedParams params = derive_for(cfg);
  for (const std::string& line : params.manifest_lines()) manifest.push_back(line);
  CheckLog log{os, {}, 0};

  log.add("malthus_residual", 0, params.malthus_residual, 0.0, 1e-8);
  log.add("psi_t0_minus_r", 0, cfg.model.walk.psi(params.t0), params.r, 1e-12);

  // Particle-sum expectations against the weighted single-walk recursion;
  // tolerance is relative because the values grow like e^{r n}.
  struct Functional {
    const char* name;
    std::function<double(int)> f;
  };
  const std::vector<Functional> fs = {
      {"one", [](int) { return 1.0; }},
      {"indicator_ge3", [](int x) { return x >= 3 ? 1.0 : 0.0; }},
      {"exp_half", [](int x) { return std::exp(0.5 * x); }}};
  const int n_m2o = std::min(cfg.n_max, 20);
  for (const Functional& fn : fs) {
    double worst = 0.0, worst_lhs = 0.0, worst_rhs = 0.0;
    int worst_n = 1;
    for (int n = 1; n <= n_m2o; ++n) {
      IdentityCheck c = many_to_one_check(cfg.model, n, fn.f);
      const double rel = c.diff / std::max(1.0, std::abs(c.rhs));
      if (rel >= worst) {
        worst = rel;
        worst_lhs = c.lhs;
        worst_rhs = c.rhs;
        worst_n = n;
      }
    }
    log.add(std::string("many_to_one_") + fn.name, worst_n, worst_lhs,
            worst_rhs, 1e-12 * std::max(1.0, std::abs(worst_rhs)));
  }

  ExpectationTable table(cfg.model, std::min(cfg.n_max, 30));
  for (int k : {1, 5, 10, 20, 30}) {
    if (k > table.n_max()) break;
    log.add("dp_martingale_mean", k, table.martingale_mean(k, *params.phi, params.r),
            1.0, 1e-9);
  }

  const long mc_reps = std::min<long>(std::max<long>(cfg.replicas, 10000), 50000);
  for (int n : {2, 4, 6}) {
    if (n > cfg.n_max) break;
    SecondMomentCheck sm = second_moment_check(cfg.model, *params.phi, params.r,
                                               n, mc_reps, cfg.seed, cfg.threads);
    log.add("pair_second_moment", n, sm.direct, sm.spine,
            3.0 * std::hypot(sm.direct_se, sm.spine_se) + 1e-9);
  }

  {
    Rng rng(cfg.seed, 7001);
    DecouplingCheck dc = decoupling_check(cfg.model, 4, mc_reps, rng);
    for (std::size_t k = 0; k < dc.empirical.size(); ++k)
      log.add("decoupling_survival", static_cast<int>(k + 1), dc.empirical[k],
              dc.exact[k], 4.0 * dc.se[k] + 1e-9);
  }

  {
    Rng rng(cfg.seed, 7002);
    TubeIdentityCheck tc = tube_identity_check(cfg.model.walk, params.r,
                                               params.t0, params.alpha,
                                               /*k=*/6, /*n=*/12, /*z=*/0.7,
                                               200000, rng);
    log.add("tilted_tube_identity", 12, tc.lhs_exact, tc.rhs_mc,
            4.0 * tc.rhs_se + 1e-9);
  }

  write_text_file(cfg.out_dir + "/verify.csv", verify_csv(log.rows));
  return finish(log, os);
}

// ---- expectation -----------------------------------------------------

int cmd_expectation(const ExperimentConfig& cfg, std::ostream& os,
                    std::vector<std::string>& manifest) {
  DerivedParams params = derive_for(cfg);
  for (const std::string& line : params.manifest_lines()) manifest.push_back(line);
  CheckLog log{os, {}, 0};

  const int n = cfg.n_max;
  ExpectationTable table(cfg.model, n);
  for (int k : {1, n / 4, n / 2, 3 * n / 4, n}) {
    if (k < 1) continue;
    log.add("dp_martingale_mean", k, table.martingale_mean(k, *params.phi, params.r),
            1.0, 1e-9);
  }

  // Occupation limit at the catalyst.  Both readings of the discounted
  // return series are printed; the renewal reading is what the recursion
  // converges to, so that is the checked row.
  const int c0_site = cfg.model.catalysts[0];
  OccupationConstant occ = occupation_constant_cx(cfg.model, c0_site, 1e-12);
  const int d = cfg.model.walk.period();
  int n_use = n;
  while (n_use > 0 && occ.residue >= 0 && n_use % d != occ.residue) --n_use;
  const double scaled = std::exp(-params.r * n_use) * table.at(n_use, c0_site);
  os << "occupation at the catalyst, n=" << n_use << ": e^{-rn} E = "
     << csv_num(scaled) << "; series reading " << csv_num(occ.series_value)
     << ", renewal reading " << csv_num(occ.renewal_value) << "\n";
  log.add("occupation_renewal_limit", n_use, scaled, occ.renewal_value,
          0.01 * occ.renewal_value + occ.tail_bound);

  if (n >= 60) {
    const int abs_max = std::min(30, n / 4);
    ProfileFit fit = occupation_profile_fit(table, cfg.model, params.r, n, 5, abs_max);
    log.add("profile_slope_vs_t0", n, -fit.slope, params.t0, 0.05 * params.t0);

    PlotSeries prof{"log10 e^{-rn} E[count]", {}, "#1f77b4", false};
    PlotSeries fitline{"fitted slope", {}, "#d62728", true};
    for (int x = c0_site; x <= c0_site + abs_max; ++x) {
      const double v = std::exp(-params.r * n) * table.at(n, x);
      if (v > 0.0)
        prof.points.emplace_back(x, std::log10(v));
    }
    if (!prof.points.empty()) {
      const double x0 = prof.points.front().first;
      const double x1 = prof.points.back().first;
      const double b = fit.intercept / std::log(10.0);
      const double sl = fit.slope / std::log(10.0);
      fitline.points = {{x0, b + sl * (x0 - c0_site)}, {x1, b + sl * (x1 - c0_site)}};
    }
    write_text_file(cfg.out_dir + "/plots/profile.svg",
                    svg_line_plot("occupation profile at n = " + std::to_string(n),
                                  "x", "log10 scaled expectation",
                                  {prof, fitline}));
  } else {
    log.skip("profile_slope_vs_t0", "n_max below 60; fit window too small");
  }

  write_text_file(cfg.out_dir + "/verify.csv", verify_csv(log.rows));
  return finish(log, os);
}

// ---- multicat --------------------------------------------------------

int cmd_multicat(const ExperimentConfig& cfg, std::ostream& os,
                 std::vector<std::string>& manifest) {
  MultiCalibration calib = solve_malthusian_multi(cfg.model);
  os << "multi-catalyst calibration: r=" << csv_num(calib.r)
     << " t0=" << csv_num(calib.t0) << " alpha=" << csv_num(calib.alpha)
     << " rho_residual=" << csv_num(calib.rho_residual) << "\n";
  manifest.push_back("r = " + csv_num(calib.r) + " | method=dp | error=" +
                     csv_num(std::abs(calib.rho_residual)));
  manifest.push_back("t0 = " + csv_num(calib.t0) + " | method=closed-form | error=1e-12");
  manifest.push_back("alpha = " + csv_num(calib.alpha) + " | method=derived | error=1e-9");
  for (std::size_t i = 0; i < calib.matrix.sites.size(); ++i)
    manifest.push_back("v[" + std::to_string(calib.matrix.sites[i]) + "] = " +
                       csv_num(calib.eig.v[i]) + " | method=dp | error=" +
                       csv_num(calib.eig.residual));

  CheckLog log{os, {}, 0};
  log.add("perron_root_residual", 0, calib.rho_residual, 0.0, 1e-9);
  log.add("eigen_residual", 0, calib.eig.residual, 0.0, 1e-10);

  if (cfg.model.single_catalyst()) {
    DerivedParams single = derive_for(cfg);
    log.add("reduction_r", 0, calib.r, single.r, 1e-6);
    log.add("reduction_t0", 0, calib.t0, single.t0, 1e-6);
  }

  MultiLlnCheck lln = lln_check_multi(cfg.model, calib, cfg.n_max, cfg.replicas,
                                      cfg.seed, cfg.threads, cfg.cap);
  os << "survivors at n=" << lln.n << ": " << lln.survivors << "/"
     << cfg.replicas << "\n";
  if (lln.survivors > 0) {
    log.add("median_speed", lln.n, lln.median_speed, calib.alpha,
            std::max(0.03, 3.0 / static_cast<double>(lln.n)));
  } else {
    log.skip("median_speed", "no surviving replicas");
  }
  log.add("lambda_mean", lln.n, lln.lambda_mean, lln.lambda_ref,
          std::max(4.0 * lln.lambda_se, 0.02));

  auto phi = phi_multi(cfg.model, calib.r, calib.eig.v,
                       cfg.model.catalysts.back() + 40);
  PlotSeries prof{"log10 phi", {}, "#1f77b4", false};
  for (int x = cfg.model.catalysts.front() - 20;
       x <= cfg.model.catalysts.back() + 20; ++x) {
    const double v = (*phi)(x);
    if (v > 0.0) prof.points.emplace_back(x, std::log10(v));
  }
  write_text_file(cfg.out_dir + "/plots/phi_profile.svg",
                  svg_line_plot("discounted first-hit value", "x", "log10 phi(x)",
                                {prof}));

  write_text_file(cfg.out_dir + "/verify.csv", verify_csv(log.rows));
  return finish(log, os);
}

}  // namespace

int run_experiment(ExperimentConfig cfg, std::ostream& os) {
  const auto start = std::chrono::steady_clock::now();
  ensure_directory(cfg.out_dir);
  ensure_directory(cfg.out_dir + "/plots");
  std::vector<std::string> manifest = manifest_header(cfg);

  int code = 2;
  double wall = 0.0;
  switch (cfg.kind) {
    case RunKind::kParams:
      code = cmd_params(cfg, os, manifest);
      break;
    case RunKind::kLln:
      code = cmd_lln(cfg, os, manifest);
      break;
    case RunKind::kFluctuation:
      code = cmd_fluctuation(cfg, os, manifest);
      break;
    case RunKind::kVerify:
      code = cmd_verify(cfg, os, manifest);
      break;
    case RunKind::kExpectation:
      code = cmd_expectation(cfg, os, manifest);
      break;
    case RunKind::kMulticat:
      code = cmd_multicat(cfg, os, manifest);
      break;
  }
  wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
             .count();
  write_manifest(cfg.out_dir, std::move(manifest), wall);
  return code;
}

int run_experiment(const std::string& config_path, const RunOverrides& overrides,
                   std::ostream& os) {
  ExperimentConfig cfg = parse_config_file(config_path);
  if (overrides.expect_kind &&
      parse_run_kind(*overrides.expect_kind) != cfg.kind)
    throw ConfigError("config kind '" + run_kind_name(cfg.kind) +
                      "' does not match the requested command '" +
                      *overrides.expect_kind + "'");
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
  if (overrides.threads) cfg.threads = *overrides.threads;
  return run_experiment(std::move(cfg), os);
}

}  // namespace cbrw
