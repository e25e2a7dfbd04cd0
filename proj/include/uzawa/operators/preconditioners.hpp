#pragma once

#include <cmath>
#include <memory>
#include <sstream>
#include <string>

#include "uzawa/error.hpp"
#include "uzawa/linalg/csr_matrix.hpp"
#include "uzawa/linalg/sparse_factor.hpp"
#include "uzawa/operators/apply_operator.hpp"

namespace uzawa {

struct PreconditionerSpec {
  enum class Kind { jacobi, ilu_droptol, ic_droptol, exact_factor, scaled_identity };

  Kind kind = Kind::scaled_identity;
  double droptol = 1e-4;
  double scale = 1.0;

  static PreconditionerSpec jacobi() { return {Kind::jacobi}; }
  static PreconditionerSpec ilu(double tol) { return {Kind::ilu_droptol, tol}; }
  static PreconditionerSpec ic(double tol) { return {Kind::ic_droptol, tol}; }
  static PreconditionerSpec exact() { return {Kind::exact_factor}; }
  static PreconditionerSpec scaled_identity(double s = 1.0) {
    return {Kind::scaled_identity, 0.0, s};
  }

  void validate() const {
    if ((kind == Kind::ilu_droptol || kind == Kind::ic_droptol) && !(droptol >= 0.0))
      throw ConfigError("preconditioner: drop tolerance must be nonnegative");
    if (kind == Kind::scaled_identity && !(scale > 0.0))
      throw ConfigError("preconditioner: scale must be positive");
  }

  std::string label() const {
    std::ostringstream s;
    switch (kind) {
      case Kind::jacobi: return "Jacobi";
      case Kind::ilu_droptol: s << "Ilu(" << droptol << ")"; return s.str();
      case Kind::ic_droptol: s << "Cholinc(" << droptol << ")"; return s.str();
      case Kind::exact_factor: return "Exact";
      case Kind::scaled_identity: s << "ScaledIdentity(" << scale << ")"; return s.str();
    }
    return "?";
  }
};

inline const char* to_string(PreconditionerSpec::Kind k) {
  switch (k) {
    case PreconditionerSpec::Kind::jacobi: return "jacobi";
    case PreconditionerSpec::Kind::ilu_droptol: return "ilu_droptol";
    case PreconditionerSpec::Kind::ic_droptol: return "ic_droptol";
    case PreconditionerSpec::Kind::exact_factor: return "exact_factor";
    case PreconditionerSpec::Kind::scaled_identity: return "scaled_identity";
  }
  return "?";
}

/// diag(A)^{-1}.
inline ApplyOperator build_jacobi(const CsrMatrix& A) {
  if (!A.square()) throw DimensionError("build_jacobi: matrix not square");
  Vector inv = A.diagonal_values();
  bool positive = true;
  for (std::size_t i = 0; i < inv.size(); ++i) {
    if (inv[i] == 0.0) {
      std::ostringstream msg;
      msg << "build_jacobi: zero diagonal entry in row " << i;
      throw FactorizationError(msg.str(), i);
    }
    positive = positive && inv[i] > 0.0;
    inv[i] = 1.0 / inv[i];
  }
  const std::size_t n = inv.size();
  return ApplyOperator(
      n,
      [inv = std::move(inv)](std::span<const double> in, std::span<double> out) {
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = inv[i] * in[i];
      },
      true, positive, "Jacobi");
}

/// Diagonal-shift retry policy for incomplete factorizations: on breakdown the
/// factorization is repeated on A + alpha * diag(A), alpha doubling from
/// `initial_shift`, at most `max_retries` times.
struct ShiftRetry {
  double initial_shift = 1e-3;
  int max_retries = 20;
};

struct IncompleteFactorBuild {
  ApplyOperator op;
  double shift = 0.0;  ///< alpha actually used, 0 when no retry was needed
  int retries = 0;
};

namespace detail {

template <class Factor>
IncompleteFactorBuild build_with_shift(const CsrMatrix& A, double droptol, ShiftRetry retry,
                                       bool symmetric, const std::string& name) {
  auto make = [&](const CsrMatrix& M) {
    auto factor = std::make_shared<const Factor>(M, droptol);
    return ApplyOperator(
        M.rows(),
        [factor](std::span<const double> in, std::span<double> out) { factor->solve(in, out); },
        symmetric, symmetric, name);
  };
  try {
    return {make(A), 0.0, 0};
  } catch (const FactorizationError& first) {
    if (retry.max_retries <= 0) throw;
    const CsrMatrix diag = CsrMatrix::diagonal(A.diagonal_values());
    double alpha = retry.initial_shift;
    for (int attempt = 1; attempt <= retry.max_retries; ++attempt, alpha *= 2.0) {
      try {
        return {make(linear_combination(1.0, A, alpha, diag)), alpha, attempt};
      } catch (const FactorizationError&) {
      }
    }
    throw FactorizationError(name + ": breakdown persists after diagonal-shift retries",
                             first.pivot());
  }
}

}  // namespace detail

/// Threshold incomplete Cholesky of an SPD matrix; returns the shift used.
inline IncompleteFactorBuild build_incomplete_cholesky_detailed(const CsrMatrix& A, double droptol,
                                                                ShiftRetry retry = {}) {
  if (!A.square()) throw DimensionError("build_incomplete_cholesky: matrix not square");
  if (!(droptol >= 0.0)) throw ConfigError("build_incomplete_cholesky: negative drop tolerance");
  std::ostringstream name;
  name << "Cholinc(" << droptol << ")";
  return detail::build_with_shift<SparseCholesky>(A, droptol, retry, true, name.str());
}

inline ApplyOperator build_incomplete_cholesky(const CsrMatrix& A, double droptol,
                                               ShiftRetry retry = {}) {
  return build_incomplete_cholesky_detailed(A, droptol, retry).op;
}

/// Threshold ILU (no pivoting). The action is not flagged symmetric even for
/// symmetric A, since row-wise dropping breaks symmetry of the factors.
inline IncompleteFactorBuild build_ilu_detailed(const CsrMatrix& A, double droptol,
                                                ShiftRetry retry = {}) {
  if (!A.square()) throw DimensionError("build_ilu: matrix not square");
  if (!(droptol >= 0.0)) throw ConfigError("build_ilu: negative drop tolerance");
  std::ostringstream name;
  name << "Ilu(" << droptol << ")";
  return detail::build_with_shift<IncompleteLU>(A, droptol, retry, false, name.str());
}

inline ApplyOperator build_ilu(const CsrMatrix& A, double droptol, ShiftRetry retry = {}) {
  return build_ilu_detailed(A, droptol, retry).op;
}

inline ApplyOperator inverse_operator(std::shared_ptr<const SparseLU> lu, std::string name = "A^-1") {
  const std::size_t n = lu->dim();
  return ApplyOperator(
      n, [lu](std::span<const double> in, std::span<double> out) { lu->solve(in, out); }, false,
      false, std::move(name));
}

inline ApplyOperator inverse_transpose_operator(std::shared_ptr<const SparseLU> lu) {
  const std::size_t n = lu->dim();
  return ApplyOperator(
      n, [lu](std::span<const double> in, std::span<double> out) { lu->solve_transpose(in, out); },
      false, false, "A^-T");
}

/// (A^{-1})_s = (A^{-1} + A^{-T}) / 2.
inline ApplyOperator symmetrized_inverse_operator(std::shared_ptr<const SparseLU> lu) {
  const std::size_t n = lu->dim();
  return ApplyOperator(
      n,
      [lu](std::span<const double> in, std::span<double> out) {
        Vector t(in.size());
        lu->solve(in, out);
        lu->solve_transpose(in, t);
        for (std::size_t i = 0; i < t.size(); ++i) out[i] = 0.5 * (out[i] + t[i]);
      },
      true, true, "(A^-1)_s");
}

/// A^{-1} through a stored factorization: Cholesky when A is exactly symmetric
/// and positive definite, pivoted LU otherwise.
inline ApplyOperator build_exact_solver(const CsrMatrix& A) {
  if (!A.square()) throw DimensionError("build_exact_solver: matrix not square");
  if (asymmetry(A) == 0.0) {
    try {
      auto chol = std::make_shared<const SparseCholesky>(A);
      return ApplyOperator(
          A.rows(),
          [chol](std::span<const double> in, std::span<double> out) { chol->solve(in, out); },
          true, true, "Exact");
    } catch (const FactorizationError&) {
    }
  }
  return inverse_operator(std::make_shared<const SparseLU>(A), "Exact");
}

/// (scale I)^{-1}.
inline ApplyOperator build_scaled_identity(std::size_t m, double scale) {
  if (!(scale > 0.0)) throw ConfigError("build_scaled_identity: scale must be positive");
  const double inv = 1.0 / scale;
  std::ostringstream name;
  name << "ScaledIdentity(" << scale << ")";
  return ApplyOperator(
      m,
      [inv](std::span<const double> in, std::span<double> out) {
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = inv * in[i];
      },
      true, true, name.str());
}

/// Builds the inverse action described by `spec` for matrix A.
inline ApplyOperator build_preconditioner(const PreconditionerSpec& spec, const CsrMatrix& A) {
  spec.validate();
  switch (spec.kind) {
    case PreconditionerSpec::Kind::jacobi: return build_jacobi(A);
    case PreconditionerSpec::Kind::ilu_droptol: return build_ilu(A, spec.droptol);
    case PreconditionerSpec::Kind::ic_droptol: return build_incomplete_cholesky(A, spec.droptol);
    case PreconditionerSpec::Kind::exact_factor: return build_exact_solver(A);
    case PreconditionerSpec::Kind::scaled_identity: return build_scaled_identity(A.rows(), spec.scale);
  }
  throw ConfigError("unknown preconditioner kind");
}

}  // namespace uzawa
