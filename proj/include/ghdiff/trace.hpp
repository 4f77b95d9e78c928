#ifndef GHDIFF_TRACE_HPP
#define GHDIFF_TRACE_HPP

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "ghdiff/errors.hpp"

namespace ghdiff {

// Shortest round-trip formatting; identical doubles always print identical
// bytes, which keeps report files reproducible.
inline std::string format_double(double v) {
  std::array<char, 40> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

struct TraceRow {
  long long iter = 0;
  double risk_centroid = 0.0;
  double grad_norm_sq_centroid = 0.0;
  double disagreement = 0.0;
  double disagreement_bound = 0.0;
  double epsilon = 0.0;
  double sensitivity_bound = 0.0;
  // Distance between the centroid of w and the centroid of phi; tracked for
  // homomorphic runs, not applicable otherwise.
  std::optional<double> centroid_residual;
};

struct RunTrace {
  std::vector<TraceRow> rows;

  long long iterations() const {
    return rows.empty() ? -1 : rows.back().iter;
  }
};

inline constexpr const char* kTraceHeader =
    "iter,risk_centroid,grad_norm_sq_centroid,disagreement,disagreement_bound,"
    "epsilon,sensitivity_bound,centroid_residual";

inline void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  out << kTraceHeader << "\n";
  for (const TraceRow& r : trace.rows) {
    out << r.iter << ',' << format_double(r.risk_centroid) << ','
        << format_double(r.grad_norm_sq_centroid) << ','
        << format_double(r.disagreement) << ','
        << format_double(r.disagreement_bound) << ',' << format_double(r.epsilon)
        << ',' << format_double(r.sensitivity_bound) << ','
        << (r.centroid_residual ? format_double(*r.centroid_residual)
                                : std::string("na"))
        << "\n";
  }
}

inline void write_trace_csv(const std::filesystem::path& path,
                            const RunTrace& trace) {
  std::ofstream out(path);
  if (!out) throw ConfigParseError("cannot write trace to '" + path.string() + "'");
  write_trace_csv(out, trace);
}

}  // namespace ghdiff

#endif  // GHDIFF_TRACE_HPP
