#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <utility>

#include "uzawa/error.hpp"
#include "uzawa/linalg/vector.hpp"

namespace uzawa {

/// A square linear action v -> Op v with claimed structure. Captured state is
/// shared and read-only, so copies are cheap and safe to use concurrently.
class ApplyOperator {
 public:
  using Action = std::function<void(std::span<const double>, std::span<double>)>;

  ApplyOperator() = default;
  ApplyOperator(std::size_t dim, Action action, bool symmetric, bool definite,
                std::string name = {})
      : dim_(dim),
        action_(std::move(action)),
        symmetric_(symmetric),
        definite_(definite),
        name_(std::move(name)) {}

  std::size_t dim() const noexcept { return dim_; }
  bool symmetric() const noexcept { return symmetric_; }
  bool definite() const noexcept { return definite_; }
  const std::string& name() const noexcept { return name_; }
  bool valid() const noexcept { return static_cast<bool>(action_); }

  void apply(std::span<const double> in, std::span<double> out) const {
    if (in.size() != dim_ || out.size() != dim_) {
      std::ostringstream msg;
      msg << "operator '" << name_ << "' has dimension " << dim_ << ", got input " << in.size()
          << " and output " << out.size();
      throw DimensionError(msg.str());
    }
    action_(in, out);
  }

  Vector operator()(std::span<const double> in) const {
    Vector out(dim_);
    apply(in, out);
    return out;
  }

 private:
  std::size_t dim_ = 0;
  Action action_;
  bool symmetric_ = false;
  bool definite_ = false;
  std::string name_;
};

/// <M x, y>. M must carry the symmetric flag.
inline double m_inner(const ApplyOperator& M, std::span<const double> x,
                      std::span<const double> y) {
  if (!M.symmetric())
    throw Error("m_inner: operator '" + M.name() + "' is not flagged symmetric");
  return dot(M(x), y);
}

/// sqrt(<M x, x>); radicands down to -1e-12 ||Mx|| ||x|| are clamped to zero.
inline double m_norm(const ApplyOperator& M, std::span<const double> x) {
  const double r = m_inner(M, x, x);
  if (r >= 0.0) return std::sqrt(r);
  const double scale = norm2(M(x)) * norm2(x);
  if (r >= -1e-12 * scale) return 0.0;
  throw Error("operator not positive on this vector");
}

/// Identity-like helpers used across modules.
inline ApplyOperator identity_operator(std::size_t n) {
  return ApplyOperator(
      n, [](std::span<const double> in, std::span<double> out) {
        std::copy(in.begin(), in.end(), out.begin());
      },
      true, true, "identity");
}

/// c * Op, flags preserved for c > 0.
inline ApplyOperator scaled_operator(double c, ApplyOperator op) {
  const std::size_t n = op.dim();
  const bool sym = op.symmetric();
  const bool def = op.definite() && c > 0.0;
  std::string name = std::to_string(c) + "*" + op.name();
  return ApplyOperator(
      n,
      [c, op = std::move(op)](std::span<const double> in, std::span<double> out) {
        op.apply(in, out);
        for (double& v : out) v *= c;
      },
      sym, def, std::move(name));
}

}  // namespace uzawa
