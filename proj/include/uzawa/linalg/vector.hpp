#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <vector>

#include "uzawa/error.hpp"

namespace uzawa {

/// Dense real vector. Plain std::vector so callers can use the usual algorithms.
using Vector = std::vector<double>;

namespace detail {

inline void require_same_length(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    std::ostringstream msg;
    msg << op << ": dimension mismatch (" << a << " vs " << b << ")";
    throw DimensionError(msg.str());
  }
}

}  // namespace detail

inline double dot(std::span<const double> x, std::span<const double> y) {
  detail::require_same_length(x.size(), y.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

inline double norm_inf(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

/// y += a * x
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  detail::require_same_length(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline Vector scaled(double a, std::span<const double> x) {
  Vector r(x.begin(), x.end());
  for (double& v : r) v *= a;
  return r;
}

inline Vector subtract(std::span<const double> x, std::span<const double> y) {
  detail::require_same_length(x.size(), y.size(), "subtract");
  Vector r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - y[i];
  return r;
}

inline Vector add(std::span<const double> x, std::span<const double> y) {
  detail::require_same_length(x.size(), y.size(), "add");
  Vector r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + y[i];
  return r;
}

inline bool all_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace uzawa
