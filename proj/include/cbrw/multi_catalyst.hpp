#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "cbrw/calibrate.hpp"
#include "cbrw/model.hpp"

namespace cbrw {

// Discounted first-return moment matrix over the catalyst set:
// entries[i][j] = m1(site_i) E_{site_i}[e^{-r tau} ; the first return to the
// set lands on site_j].
struct CatalystMatrix {
  std::vector<int> sites;                    // ascending
  std::vector<std::vector<double>> entries;  // [from][to]
  std::vector<double> row_tail;              // dropped discounted mass per row
  double r = 0.0;

  double row_sum(std::size_t i) const;
};

CatalystMatrix estimate_Mr(const ModelSpec& model, double r,
                           double precision = 1e-12);

struct PerronData {
  double rho = 0.0;
  std::vector<double> v;  // strictly positive, v[0] = 1
  int iterations = 0;
  double residual = 0.0;  // max_i |(M v)_i - rho v_i|
};

// Power iteration with a positive diagonal shift; requires an irreducible
// nonnegative matrix.
PerronData perron(const CatalystMatrix& matrix, double tol = 1e-12,
                  int max_iter = 200000);

struct MultiCalibration {
  double r = 0.0;
  double t0 = 0.0;
  double alpha = 0.0;  // r / t0
  CatalystMatrix matrix;
  PerronData eig;
  double rho_residual = 0.0;  // |rho(M(r)) - 1| at the returned r
};

// The unique r > 0 with Perron root 1, by bisection on the strictly
// decreasing map r -> rho(M(r)).  Models whose root lies below r_floor are
// rejected as numerically subcritical.
MultiCalibration solve_malthusian_multi(const ModelSpec& model,
                                        double precision = 1e-9,
                                        double r_floor = 0.005);

// First-hit value phi(x) = sum_a v(a) E_x[e^{-r T_C}; T_C = T_a < infinity],
// as a lattice table with boundary v on the catalyst sites.
std::shared_ptr<PhiFunction> phi_multi(const ModelSpec& model, double r,
                                       const std::vector<double>& v,
                                       int x_max);

struct MultiLlnCheck {
  int n = 0;
  long survivors = 0;
  double median_speed = 0.0;  // median (M_n - rightmost catalyst) / n
  double alpha = 0.0;
  double gap = 0.0;           // |median_speed - alpha|
  double lambda_mean = 0.0;   // fundamental martingale mean over all replicas
  double lambda_se = 0.0;
  double lambda_ref = 0.0;    // phi at the start site
};

MultiLlnCheck lln_check_multi(const ModelSpec& model,
                              const MultiCalibration& calib, int n_max,
                              long replicas, std::uint64_t seed,
                              int threads = 1, double cap = 1e8);

}  // namespace cbrw
