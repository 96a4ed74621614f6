#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cbrw/engine.hpp"

namespace cbrw {

// Shortest round-trip decimal for a double; -inf renders as the empty
// field so extinct maxima stay machine-readable.
std::string csv_num(double v);

struct VerifyRow {
  std::string name;
  int n = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  bool pass = false;

  double diff() const;
  static VerifyRow make(std::string name, int n, double lhs, double rhs,
                        double tolerance);
};

std::string runs_csv(const EnsembleResult& res, const std::vector<int>& times);
std::string summary_csv(const std::vector<LlnSummary>& rows);
std::string tail_csv(const FluctuationResult& res);
std::string verify_csv(const std::vector<VerifyRow>& rows);

void write_text_file(const std::string& path, const std::string& content);
void ensure_directory(const std::string& path);

// One polyline per series on a shared frame with ticks and a small legend.
// Everything is emitted natively; coordinates are fixed-point so output is
// byte-stable.
struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
  std::string color = "#1f77b4";
  bool dashed = false;
};

std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::string& y_label,
                          const std::vector<PlotSeries>& series);

}  // namespace cbrw
