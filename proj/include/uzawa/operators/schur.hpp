#pragma once

#include <sstream>
#include <string>

#include "uzawa/error.hpp"
#include "uzawa/operators/apply_operator.hpp"
#include "uzawa/operators/preconditioners.hpp"
#include "uzawa/solvers/saddle_system.hpp"

namespace uzawa {

/// Which Schur-type block an operator represents:
///   H  = B^T A_s^{-1} B + D
///   M  = B^T A_0^{-1} B + D
///   S  = B^T A^{-1} B + D
///   Ss = B^T (A^{-1})_s B + D
enum class SchurKind { H, M, S, Ss };

inline const char* to_string(SchurKind k) {
  switch (k) {
    case SchurKind::H: return "H";
    case SchurKind::M: return "M";
    case SchurKind::S: return "S";
    case SchurKind::Ss: return "Ss";
  }
  return "?";
}

/// v -> B^T inner(B v) + D v. `inner` must be the inverse action matching
/// `kind` (A_s^{-1}, A_0^{-1}, A^{-1}, or the symmetrized inverse for Ss).
inline ApplyOperator schur_operator(const SaddleSystem& sys, ApplyOperator inner, SchurKind kind) {
  if (inner.dim() != sys.n()) {
    std::ostringstream msg;
    msg << "schur_operator: inner operator has dimension " << inner.dim() << ", expected "
        << sys.n();
    throw DimensionError(msg.str());
  }
  if (sys.B.rows() != sys.n() || sys.D.rows() != sys.m())
    throw DimensionError("schur_operator: inconsistent B/D dimensions");
  const bool sym = kind != SchurKind::S;
  const bool def = sym && inner.definite();
  const CsrMatrix* B = &sys.B;
  const CsrMatrix* D = &sys.D;
  // The operator references sys; callers keep the system alive while it is in use.
  return ApplyOperator(
      sys.m(),
      [B, D, inner = std::move(inner)](std::span<const double> v, std::span<double> out) {
        Vector bv = spmv(*B, v);
        Vector w = inner(bv);
        spmv_transpose(*B, w, out);
        if (D->nnz() > 0) {
          Vector dv = spmv(*D, v);
          for (std::size_t i = 0; i < out.size(); ++i) out[i] += dv[i];
        }
      },
      sym, def, to_string(kind));
}

/// Sparse surrogate B^T diag(A_s)^{-1} B + D, the matrix that non-identity
/// Schur preconditioner kinds are built from.
inline CsrMatrix schur_approximation_matrix(const SaddleSystem& sys) {
  const Vector d = sys.A.diagonal_values();
  std::vector<Triplet> t;
  for (std::size_t k = 0; k < sys.n(); ++k) {
    if (!(d[k] > 0.0)) throw FactorizationError("schur_approximation_matrix: nonpositive diagonal of A", k);
    auto c = sys.B.row_cols(k);
    auto v = sys.B.row_values(k);
    for (std::size_t a = 0; a < c.size(); ++a)
      for (std::size_t b = 0; b < c.size(); ++b) t.push_back({c[a], c[b], v[a] * v[b] / d[k]});
  }
  for (std::size_t i = 0; i < sys.m(); ++i) {
    auto c = sys.D.row_cols(i);
    auto v = sys.D.row_values(i);
    for (std::size_t k = 0; k < c.size(); ++k) t.push_back({i, c[k], v[k]});
  }
  return CsrMatrix::from_triplets(sys.m(), sys.m(), std::move(t));
}

/// The inverse action S_hat^{-1}. Scaled identity needs no matrix; other kinds
/// factor schur_approximation_matrix(sys).
inline ApplyOperator build_schur_preconditioner(const PreconditionerSpec& spec, const SaddleSystem& sys) {
  if (spec.kind == PreconditionerSpec::Kind::scaled_identity)
    return build_scaled_identity(sys.m(), spec.scale);
  return build_preconditioner(spec, schur_approximation_matrix(sys));
}

}  // namespace uzawa
