#include "cbrw/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cbrw/errors.hpp"

namespace cbrw {

std::string csv_num(double v) {
  if (std::isinf(v) && v < 0) return "";
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double VerifyRow::diff() const { return std::abs(lhs - rhs); }

VerifyRow VerifyRow::make(std::string name, int n, double lhs, double rhs,
                          double tolerance) {
  VerifyRow row;
  row.name = std::move(name);
  row.n = n;
  row.lhs = lhs;
  row.rhs = rhs;
  row.tolerance = tolerance;
  row.pass = std::isfinite(lhs) && std::isfinite(rhs) &&
             std::abs(lhs - rhs) <= tolerance;
  return row;
}

std::string runs_csv(const EnsembleResult& res, const std::vector<int>& times) {
  std::string out = "replica,n,M_n,eta0,lambda_n,total,survived\n";
  for (long rep = 0; rep < res.replicas; ++rep) {
    for (std::size_t ti = 0; ti < res.n_times; ++ti) {
      const RunRecord& rec = res.at(rep, ti);
      out += std::to_string(rec.replica);
      out += ',';
      out += std::to_string(times[ti]);
      out += ',';
      out += csv_num(rec.m_n);
      out += ',';
      out += csv_num(rec.eta0);
      out += ',';
      out += csv_num(rec.lambda_n);
      out += ',';
      out += csv_num(rec.total);
      out += ',';
      out += rec.survived ? '1' : '0';
      out += '\n';
    }
  }
  return out;
}

std::string summary_csv(const std::vector<LlnSummary>& rows) {
  std::string out =
      "n,survivors,survival_rate,se_survival,mean_speed,se_speed,"
      "mean_lambda,se_lambda,mean_eta0_scaled,se_eta0_scaled\n";
  for (const LlnSummary& s : rows) {
    out += std::to_string(s.n);
    out += ',';
    out += std::to_string(s.survivors);
    for (double v : {s.survival_rate, s.se_survival, s.mean_speed, s.se_speed,
                     s.mean_lambda, s.se_lambda, s.mean_eta0_scaled,
                     s.se_eta0_scaled}) {
      out += ',';
      out += csv_num(v);
    }
    out += '\n';
  }
  return out;
}

std::string tail_csv(const FluctuationResult& res) {
  std::string out =
      "n,y,p_emp,se,p_model_A,p_model_B,p_model_series,"
      "p_model_renewal,p_model_dp,se_model\n";
  for (const TailRow& row : res.rows) {
    out += std::to_string(row.n);
    for (double v : {row.y, row.p_emp, row.se, row.p_a, row.p_b, row.p_series,
                     row.p_renewal, row.p_dp, row.se_model}) {
      out += ',';
      out += csv_num(v);
    }
    out += '\n';
  }
  return out;
}

std::string verify_csv(const std::vector<VerifyRow>& rows) {
  std::string out = "name,n,lhs,rhs,diff,tolerance,pass/fail\n";
  for (const VerifyRow& row : rows) {
    out += row.name;
    out += ',';
    out += std::to_string(row.n);
    for (double v : {row.lhs, row.rhs, row.diff(), row.tolerance}) {
      out += ',';
      out += csv_num(v);
    }
    out += ',';
    out += row.pass ? "pass" : "fail";
    out += '\n';
  }
  return out;
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw Error("cannot create directory '" + path + "': " + ec.message());
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("write failed for '" + path + "'");
}

namespace {

std::string fixed2(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Round the raw [lo, hi] span to a tick-friendly frame.
struct Axis {
  double lo = 0.0, hi = 1.0, step = 0.25;
};

Axis frame_axis(double lo, double hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  double span = hi - lo;
  double raw = span / 5.0;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double mult : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (mag * mult >= raw) {
      step = mag * mult;
      break;
    }
  }
  Axis ax;
  ax.step = step;
  ax.lo = std::floor(lo / step) * step;
  ax.hi = std::ceil(hi / step) * step;
  return ax;
}

std::string tick_label(double v, double step) {
  int decimals = 0;
  if (step < 1.0) decimals = static_cast<int>(std::ceil(-std::log10(step) + 0.5));
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::string& y_label,
                          const std::vector<PlotSeries>& series) {
  const double width = 640, height = 420;
  const double ml = 64, mr = 16, mt = 36, mb = 48;

  double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
  for (const PlotSeries& s : series) {
    for (auto [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  }
  if (x_lo > x_hi) {
    x_lo = 0;
    x_hi = 1;
    y_lo = 0;
    y_hi = 1;
  }
  Axis xa = frame_axis(x_lo, x_hi);
  Axis ya = frame_axis(y_lo, y_hi);

  auto px = [&](double x) {
    return ml + (x - xa.lo) / (xa.hi - xa.lo) * (width - ml - mr);
  };
  auto py = [&](double y) {
    return height - mb - (y - ya.lo) / (ya.hi - ya.lo) * (height - mt - mb);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";

  // Frame and ticks.
  svg << "<rect x=\"" << fixed2(ml) << "\" y=\"" << fixed2(mt) << "\" width=\""
      << fixed2(width - ml - mr) << "\" height=\"" << fixed2(height - mt - mb)
      << "\" fill=\"none\" stroke=\"#888\"/>\n";
  for (double v = xa.lo; v <= xa.hi + xa.step * 0.5; v += xa.step) {
    double x = px(v);
    svg << "<line x1=\"" << fixed2(x) << "\" y1=\"" << fixed2(height - mb)
        << "\" x2=\"" << fixed2(x) << "\" y2=\"" << fixed2(height - mb + 5)
        << "\" stroke=\"#888\"/>\n";
    svg << "<text x=\"" << fixed2(x) << "\" y=\"" << fixed2(height - mb + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << tick_label(v, xa.step) << "</text>\n";
  }
  for (double v = ya.lo; v <= ya.hi + ya.step * 0.5; v += ya.step) {
    double y = py(v);
    svg << "<line x1=\"" << fixed2(ml - 5) << "\" y1=\"" << fixed2(y)
        << "\" x2=\"" << fixed2(ml) << "\" y2=\"" << fixed2(y)
        << "\" stroke=\"#888\"/>\n";
    svg << "<text x=\"" << fixed2(ml - 8) << "\" y=\"" << fixed2(y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << tick_label(v, ya.step) << "</text>\n";
  }
  svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"12\">" << x_label << "</text>\n";
  svg << "<text x=\"16\" y=\"" << height / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << height / 2 << ")\">" << y_label
      << "</text>\n";

  double legend_y = mt + 14;
  for (const PlotSeries& s : series) {
    if (s.points.empty()) continue;
    svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
    if (s.dashed) svg << " stroke-dasharray=\"6 4\"";
    svg << " points=\"";
    bool first = true;
    for (auto [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (!first) svg << ' ';
      svg << fixed2(px(x)) << ',' << fixed2(py(y));
      first = false;
    }
    svg << "\"/>\n";
    if (!s.label.empty()) {
      double lx = width - mr - 150;
      svg << "<line x1=\"" << fixed2(lx) << "\" y1=\"" << fixed2(legend_y - 4)
          << "\" x2=\"" << fixed2(lx + 22) << "\" y2=\"" << fixed2(legend_y - 4)
          << "\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
          << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
      svg << "<text x=\"" << fixed2(lx + 28) << "\" y=\"" << fixed2(legend_y)
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label
          << "</text>\n";
      legend_y += 16;
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace cbrw
