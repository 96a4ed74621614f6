#pragma once

#include <cstdint>
#include <vector>

#include "cbrw/calibrate.hpp"
#include "cbrw/model.hpp"

namespace cbrw {

// Snapshot of one replica at one recorded generation.  m_n is -inf for an
// extinct population.
struct RunRecord {
  long replica = 0;
  int n = 0;
  double m_n = 0.0;
  double eta0 = 0.0;      // particles at the first catalyst
  double lambda_n = 0.0;  // e^{-r n} sum_x phi(x) count(x)
  double total = 0.0;
  bool survived = false;
  bool capped = false;    // cap fired at least once up to n
};

struct EnsembleSpec {
  std::vector<int> times;  // ascending distinct generations, all >= 1
  long replicas = 0;
  std::uint64_t seed = 0;
  double cap = 1e8;
  int threads = 1;
};

// Replica-major record matrix.  Replica i always consumes the stream
// (seed, i + 1) regardless of thread count, so results are byte-stable.
struct EnsembleResult {
  std::vector<RunRecord> records;
  std::size_t n_times = 0;
  long replicas = 0;
  long survivors_final = 0;
  long capped_runs = 0;

  const RunRecord& at(long replica, std::size_t time_index) const {
    return records[static_cast<std::size_t>(replica) * n_times + time_index];
  }
};

EnsembleResult run_ensemble(const ModelSpec& model, const PhiFunction& phi,
                            double r, const EnsembleSpec& spec);

struct LlnSummary {
  int n = 0;
  long survivors = 0;
  double survival_rate = 0.0;
  double se_survival = 0.0;
  double mean_speed = 0.0;  // M_n / n over surviving replicas
  double se_speed = 0.0;
  double mean_lambda = 0.0;  // over all replicas; martingale mean
  double se_lambda = 0.0;
  double mean_eta0_scaled = 0.0;  // e^{-r n} eta0 over all replicas
  double se_eta0_scaled = 0.0;
};

LlnSummary summarize_lln(const EnsembleResult& res, std::size_t time_index,
                         double r);

struct TailRow {
  int n = 0;
  double y = 0.0;
  double p_emp = 0.0;
  double se = 0.0;
  double p_a = 0.0;
  double p_b = 0.0;
  double p_series = 0.0;
  double p_renewal = 0.0;
  double p_dp = 0.0;      // expectation-table intensity model, when supplied
  double se_model = 0.0;  // MC error of the renewal model column
};

struct FluctuationSpec {
  std::vector<int> n_list;   // ascending
  std::vector<double> y_list;
  long replicas = 0;
  std::uint64_t seed = 0;
  double cap = 1e8;
  int threads = 1;
  // Optional exact tail intensities E[#particles above the exceedance level]
  // indexed [n][y]; fills the p_dp column when present.
  std::vector<std::vector<double>> intensities;
};

struct FluctuationResult {
  std::vector<TailRow> rows;       // n-major, y-minor
  double sup_gap_a = 0.0;          // max |p_emp - p_model| over the grid
  double sup_gap_b = 0.0;
  double sup_gap_series = 0.0;
  double sup_gap_renewal = 0.0;
  double sup_gap_dp = 0.0;
  double mean_w_proxy = 0.0;       // mean of the half-time martingale values
  long survivors_final = 0;
  long capped_runs = 0;
};

// Exceedance table P(M_n > alpha n + y) against the mixed-Gumbel model
// 1 - E[exp(-c W e^{-t0 (x_y - alpha n)})], x_y the smallest integer above
// alpha n + y, with W read off each replica's half-time martingale value.
// Requires an aperiodic walk (the c* constants exist).
FluctuationResult fluctuation_experiment(const ModelSpec& model,
                                         const DerivedParams& params,
                                         const FluctuationSpec& spec);

}  // namespace cbrw
