#ifndef GHDIFF_REPORT_HPP
#define GHDIFF_REPORT_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ghdiff/errors.hpp"
#include "ghdiff/kvdoc.hpp"
#include "ghdiff/losses.hpp"
#include "ghdiff/metrics.hpp"
#include "ghdiff/trace.hpp"

namespace ghdiff {

inline constexpr const char* kComparisonHeader =
    "iter,scheme,risk_mean,risk_stderr,excess_mean,excess_stderr,"
    "grad_norm_sq_mean,disagreement_mean,disagreement_stderr,"
    "disagreement_bound,epsilon,sensitivity_bound";

inline void write_comparison_csv(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, AggregatedTrace>>& per_scheme) {
  std::ofstream out(path);
  if (!out) throw ConfigParseError("cannot write '" + path.string() + "'");
  out << kComparisonHeader << "\n";
  for (const auto& [label, agg] : per_scheme) {
    for (std::size_t i = 0; i < agg.iters.size(); ++i) {
      out << agg.iters[i] << ',' << label << ',' << format_double(agg.risk.mean[i])
          << ',' << format_double(agg.risk.stderr_[i]) << ','
          << format_double(agg.excess_risk.mean[i]) << ','
          << format_double(agg.excess_risk.stderr_[i]) << ','
          << format_double(agg.grad_norm_sq.mean[i]) << ','
          << format_double(agg.disagreement.mean[i]) << ','
          << format_double(agg.disagreement.stderr_[i]) << ','
          << format_double(agg.disagreement_bound[i]) << ','
          << format_double(agg.epsilon[i]) << ','
          << format_double(agg.sensitivity_bound[i]) << "\n";
    }
  }
}

struct ComparisonPoint {
  long long iter = 0;
  double excess_mean = 0.0;
};

// Minimal reader for the comparison CSV; the SVG is rendered from the file
// contents alone so the chart can always be regenerated from shipped data.
inline std::map<std::string, std::vector<ComparisonPoint>> read_comparison_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigParseError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != kComparisonHeader) {
    throw ConfigParseError("'" + path.string() + "': unexpected comparison header");
  }
  std::map<std::string, std::vector<ComparisonPoint>> series;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 5) {
      throw ConfigParseError("'" + path.string() + "': malformed row '" + line + "'");
    }
    ComparisonPoint p;
    p.iter = KvDoc::parse_int(cells[0], "iter");
    p.excess_mean = KvDoc::parse_double(cells[4], "excess_mean");
    series[cells[1]].push_back(p);
  }
  return series;
}

namespace svg {

inline const char* color(std::size_t index) {
  static constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                             "#9467bd", "#ff7f0e", "#8c564b"};
  return kPalette[index % (sizeof(kPalette) / sizeof(kPalette[0]))];
}

}  // namespace svg

// Multi-line chart of per-scheme excess risk, log-scale vertical axis.
// Presentation only: everything plotted comes from the comparison CSV.
inline void write_svg_from_comparison(const std::filesystem::path& csv_path,
                                      const std::filesystem::path& svg_path) {
  const auto series = read_comparison_csv(csv_path);
  if (series.empty()) throw ConfigParseError("svg: comparison CSV has no data rows");

  long long x_max = 1;
  double y_min = std::numeric_limits<double>::infinity();
  double y_max = 0.0;
  for (const auto& [label, points] : series) {
    for (const ComparisonPoint& p : points) {
      x_max = std::max(x_max, p.iter);
      if (p.excess_mean > 0) {
        y_min = std::min(y_min, p.excess_mean);
        y_max = std::max(y_max, p.excess_mean);
      }
    }
  }
  if (!(y_max > 0)) {
    y_min = 1e-3;
    y_max = 1.0;
  }
  y_min = std::max(y_min, y_max * 1e-8);
  const double log_lo = std::floor(std::log10(y_min));
  const double log_hi = std::ceil(std::log10(y_max) + 1e-9);

  const double width = 960, height = 600;
  const double left = 80, right = width - 190, top = 50, bottom = height - 60;
  auto x_of = [&](double iter) {
    return left + (right - left) * iter / static_cast<double>(x_max);
  };
  auto y_of = [&](double value) {
    const double v = std::log10(std::max(value, y_min));
    return bottom - (bottom - top) * (v - log_lo) / std::max(1.0, log_hi - log_lo);
  };

  std::ofstream out(svg_path);
  if (!out) throw ConfigParseError("cannot write '" + svg_path.string() + "'");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << (left + (right - left) / 2)
      << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">excess risk at the network centroid</text>\n";

  // vertical grid and ticks
  const int x_ticks = 6;
  for (int t = 0; t <= x_ticks; ++t) {
    const double iter = x_max * static_cast<double>(t) / x_ticks;
    const double x = x_of(iter);
    out << "<line x1=\"" << x << "\" y1=\"" << top << "\" x2=\"" << x << "\" y2=\""
        << bottom << "\" stroke=\"#e0e0e0\"/>\n";
    out << "<text x=\"" << x << "\" y=\"" << (bottom + 20)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << static_cast<long long>(iter) << "</text>\n";
  }
  for (double e = log_lo; e <= log_hi + 1e-9; e += 1.0) {
    const double y = y_of(std::pow(10.0, e));
    out << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << right
        << "\" y2=\"" << y << "\" stroke=\"#e0e0e0\"/>\n";
    out << "<text x=\"" << (left - 8) << "\" y=\"" << (y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">1e"
        << static_cast<int>(e) << "</text>\n";
  }
  out << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right
      << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
      << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << (left + (right - left) / 2) << "\" y=\"" << (height - 16)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">iteration</text>\n";

  std::size_t idx = 0;
  for (const auto& [label, points] : series) {
    out << "<polyline fill=\"none\" stroke=\"" << svg::color(idx)
        << "\" stroke-width=\"1.6\" points=\"";
    for (const ComparisonPoint& p : points) {
      out << x_of(static_cast<double>(p.iter)) << "," << y_of(p.excess_mean) << " ";
    }
    out << "\"/>\n";
    const double ly = top + 22.0 * static_cast<double>(idx);
    out << "<line x1=\"" << (right + 12) << "\" y1=\"" << ly << "\" x2=\""
        << (right + 40) << "\" y2=\"" << ly << "\" stroke=\"" << svg::color(idx)
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << (right + 46) << "\" y=\"" << (ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << label
        << "</text>\n";
    ++idx;
  }
  out << "</svg>\n";
}

// gamma,h_1..h_M rows for the shared evaluation set.
inline void write_eval_set_csv(const std::filesystem::path& path,
                               std::span<const Sample> eval_set) {
  std::ofstream out(path);
  if (!out) throw ConfigParseError("cannot write '" + path.string() + "'");
  if (eval_set.empty()) throw EmptyEvalSet("write_eval_set_csv: empty evaluation set");
  out << "gamma";
  for (Eigen::Index i = 0; i < eval_set.front().features.size(); ++i) {
    out << ",h_" << (i + 1);
  }
  out << "\n";
  for (const Sample& s : eval_set) {
    out << format_double(s.label);
    for (Eigen::Index i = 0; i < s.features.size(); ++i) {
      out << ',' << format_double(s.features[i]);
    }
    out << "\n";
  }
}

}  // namespace ghdiff

#endif  // GHDIFF_REPORT_HPP
