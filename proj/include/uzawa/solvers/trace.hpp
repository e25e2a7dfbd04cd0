#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace uzawa {

enum class SolveStatus { converged, max_iter, breakdown };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::breakdown: return "breakdown";
  }
  return "?";
}

/// Residuals after `iter` steps; iteration 0 is the initial guess.
struct IterationRecord {
  std::size_t iter = 0;
  double res_x = 0.0;
  double res_y = 0.0;
  double res_combined = 0.0;
  std::optional<double> tau;    ///< empty for iteration 0
  std::optional<double> omega;  ///< set when the x-relaxation is variable
  std::int64_t wall_ns = 0;     ///< time of the step that produced this record
};

struct IterationTrace {
  std::vector<IterationRecord> records;
  SolveStatus status = SolveStatus::max_iter;
  std::string message;
  double tol = 0.0;
  double rhs_norm = 0.0;
  std::map<std::string, std::string> metadata;
  std::vector<std::string> notes;

  /// Number of steps taken.
  std::size_t iterations() const { return records.empty() ? 0 : records.back().iter; }

  double final_residual() const {
    return records.empty() ? std::numeric_limits<double>::quiet_NaN() : records.back().res_combined;
  }

  double final_relative_residual() const {
    return rhs_norm > 0.0 ? final_residual() / rhs_norm : final_residual();
  }

  bool has_variable_omega() const {
    for (const auto& r : records)
      if (r.omega) return true;
    return false;
  }

  double total_wall_seconds() const {
    std::int64_t ns = 0;
    for (const auto& r : records) ns += r.wall_ns;
    return static_cast<double>(ns) * 1e-9;
  }
};

namespace detail {

inline void write_number(std::ostream& out, double v) {
  if (std::isfinite(v))
    out << v;
  else
    out << "null";
}

inline void write_optional(std::ostream& out, const std::optional<double>& v) {
  if (v)
    write_number(out, *v);
  else
    out << "null";
}

struct PrecisionGuard {
  std::ostream& out;
  std::streamsize old;
  explicit PrecisionGuard(std::ostream& o)
      : out(o), old(o.precision(std::numeric_limits<double>::max_digits10)) {}
  ~PrecisionGuard() { out.precision(old); }
};

}  // namespace detail

/// One JSON object per record: {iter, res_x, res_y, res_combined, tau, omega?, wall_ns}.
inline void write_trace_jsonl(std::ostream& out, const IterationTrace& trace) {
  detail::PrecisionGuard guard(out);
  const bool with_omega = trace.has_variable_omega();
  for (const auto& r : trace.records) {
    out << "{\"iter\":" << r.iter << ",\"res_x\":";
    detail::write_number(out, r.res_x);
    out << ",\"res_y\":";
    detail::write_number(out, r.res_y);
    out << ",\"res_combined\":";
    detail::write_number(out, r.res_combined);
    out << ",\"tau\":";
    detail::write_optional(out, r.tau);
    if (with_omega) {
      out << ",\"omega\":";
      detail::write_optional(out, r.omega);
    }
    out << ",\"wall_ns\":" << r.wall_ns << "}\n";
  }
}

/// Same columns as the JSONL form; missing values are empty cells.
inline void write_trace_csv(std::ostream& out, const IterationTrace& trace) {
  detail::PrecisionGuard guard(out);
  const bool with_omega = trace.has_variable_omega();
  out << "iter,res_x,res_y,res_combined,tau" << (with_omega ? ",omega" : "") << ",wall_ns\n";
  for (const auto& r : trace.records) {
    out << r.iter << "," << r.res_x << "," << r.res_y << "," << r.res_combined << ",";
    if (r.tau) out << *r.tau;
    if (with_omega) {
      out << ",";
      if (r.omega) out << *r.omega;
    }
    out << "," << r.wall_ns << "\n";
  }
}

}  // namespace uzawa
