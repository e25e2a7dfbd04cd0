#pragma once

#include <cmath>
#include <sstream>
#include <string>

#include "uzawa/error.hpp"
#include "uzawa/linalg/csr_matrix.hpp"
#include "uzawa/linalg/sparse_factor.hpp"
#include "uzawa/linalg/vector.hpp"

namespace uzawa {

/// Block system
///     [ A   B ] [x]   [f]
///     [ B^T -D] [y] = [g]
/// with A n x n (A_s SPD), B n x m, D m x m symmetric PSD.
struct SaddleSystem {
  CsrMatrix A;
  CsrMatrix B;
  CsrMatrix D;
  Vector f;
  Vector g;
  /// When set, y is only determined up to constants and solvers keep it mean-free.
  bool constant_pressure_nullspace = false;

  std::size_t n() const noexcept { return A.rows(); }
  std::size_t m() const noexcept { return B.cols(); }
};

struct SystemChecks {
  bool dimensions = true;
  bool d_symmetric = true;
  bool d_psd = true;
  bool a_sym_part_spd = true;
};

/// Dimension and structural checks. The PSD/SPD checks are exact Cholesky tests
/// (D + 1e-10 ||D||_1 I and A_s), so they are cheap at any size.
inline void validate(const SaddleSystem& sys, SystemChecks checks = {}) {
  auto fail = [](const std::string& what) { throw DimensionError("saddle system: " + what); };
  if (checks.dimensions) {
    if (!sys.A.square()) fail("A must be square");
    if (sys.B.rows() != sys.n()) fail("B must have n rows");
    if (sys.m() > sys.n()) fail("m must not exceed n");
    if (sys.D.rows() != sys.m() || sys.D.cols() != sys.m()) fail("D must be m x m");
    if (sys.f.size() != sys.n()) fail("f must have length n");
    if (sys.g.size() != sys.m()) fail("g must have length m");
    if (!all_finite(sys.f) || !all_finite(sys.g)) fail("right-hand side has non-finite entries");
  }
  if (checks.d_symmetric && asymmetry(sys.D) > 1e-12) fail("D is not symmetric");
  if (checks.d_psd && sys.D.nnz() > 0) {
    const double shift = 1e-10 * std::max(norm1(sys.D), 1e-300);
    const CsrMatrix shifted =
        linear_combination(1.0, sys.D, shift, CsrMatrix::identity(sys.m()));
    if (!is_positive_definite(shifted)) fail("D is not positive semidefinite");
  }
  if (checks.a_sym_part_spd && !is_positive_definite(symmetric_part(sys.A)))
    fail("symmetric part of A is not positive definite");
}

struct Residuals {
  double x = 0.0;  ///< ||f - A x - B y||
  double y = 0.0;  ///< ||B^T x - D y - g||
  double combined() const { return std::hypot(x, y); }
};

inline Vector residual_x(const SaddleSystem& sys, std::span<const double> x,
                         std::span<const double> y) {
  Vector r = spmv(sys.A, x);
  Vector by = spmv(sys.B, y);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = sys.f[i] - r[i] - by[i];
  return r;
}

/// B^T x - D y - g; this is the g_i of the Uzawa updates.
inline Vector residual_y(const SaddleSystem& sys, std::span<const double> x,
                         std::span<const double> y) {
  Vector r = spmv_transpose(sys.B, x);
  Vector dy = spmv(sys.D, y);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = r[i] - dy[i] - sys.g[i];
  return r;
}

inline Residuals residuals(const SaddleSystem& sys, std::span<const double> x,
                           std::span<const double> y) {
  return {norm2(residual_x(sys, x, y)), norm2(residual_y(sys, x, y))};
}

inline double rhs_norm(const SaddleSystem& sys) { return std::hypot(norm2(sys.f), norm2(sys.g)); }

/// The full (n+m) x (n+m) block matrix; used by GMRES and direct reference solves.
inline CsrMatrix assemble_block_matrix(const SaddleSystem& sys) {
  const std::size_t n = sys.n(), m = sys.m();
  std::vector<Triplet> t;
  t.reserve(sys.A.nnz() + 2 * sys.B.nnz() + sys.D.nnz());
  for (std::size_t i = 0; i < n; ++i) {
    auto c = sys.A.row_cols(i);
    auto v = sys.A.row_values(i);
    for (std::size_t k = 0; k < c.size(); ++k) t.push_back({i, c[k], v[k]});
    auto bc = sys.B.row_cols(i);
    auto bv = sys.B.row_values(i);
    for (std::size_t k = 0; k < bc.size(); ++k) {
      t.push_back({i, n + bc[k], bv[k]});
      t.push_back({n + bc[k], i, bv[k]});
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    auto c = sys.D.row_cols(i);
    auto v = sys.D.row_values(i);
    for (std::size_t k = 0; k < c.size(); ++k) t.push_back({n + i, n + c[k], -v[k]});
  }
  return CsrMatrix::from_triplets(n + m, n + m, std::move(t));
}

}  // namespace uzawa
