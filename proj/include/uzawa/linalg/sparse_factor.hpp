#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <sstream>
#include <vector>

#include "uzawa/error.hpp"
#include "uzawa/linalg/csr_matrix.hpp"
#include "uzawa/linalg/vector.hpp"

namespace uzawa {

/// Left-looking sparse LU with partial (row) pivoting, PA = LU, natural column
/// order. Supports solves with A and with A^T from the same factors.
class SparseLU {
 public:
  explicit SparseLU(const CsrMatrix& A) { factor(A); }

  std::size_t dim() const noexcept { return n_; }
  std::size_t fill() const noexcept { return l_val_.size() + u_val_.size() + n_; }

  void solve(std::span<const double> b, std::span<double> x) const {
    detail::require_same_length(b.size(), n_, "SparseLU::solve");
    detail::require_same_length(x.size(), n_, "SparseLU::solve");
    Vector w(n_);
    for (std::size_t k = 0; k < n_; ++k) w[k] = b[piv_[k]];
    for (std::size_t k = 0; k < n_; ++k) {
      const double wk = w[k];
      if (wk == 0.0) continue;
      for (std::size_t q = l_ptr_[k]; q < l_ptr_[k + 1]; ++q) w[l_row_[q]] -= l_val_[q] * wk;
    }
    for (std::size_t j = n_; j-- > 0;) {
      w[j] /= u_diag_[j];
      const double wj = w[j];
      if (wj == 0.0) continue;
      for (std::size_t q = u_ptr_[j]; q < u_ptr_[j + 1]; ++q) w[u_row_[q]] -= u_val_[q] * wj;
    }
    std::copy(w.begin(), w.end(), x.begin());
  }

  Vector solve(std::span<const double> b) const {
    Vector x(n_);
    solve(b, x);
    return x;
  }

  /// Solves A^T x = b, i.e. U^T L^T (P x) = b.
  void solve_transpose(std::span<const double> b, std::span<double> x) const {
    detail::require_same_length(b.size(), n_, "SparseLU::solve_transpose");
    detail::require_same_length(x.size(), n_, "SparseLU::solve_transpose");
    Vector z(b.begin(), b.end());
    for (std::size_t j = 0; j < n_; ++j) {
      double s = z[j];
      for (std::size_t q = u_ptr_[j]; q < u_ptr_[j + 1]; ++q) s -= u_val_[q] * z[u_row_[q]];
      z[j] = s / u_diag_[j];
    }
    for (std::size_t k = n_; k-- > 0;) {
      double s = z[k];
      for (std::size_t q = l_ptr_[k]; q < l_ptr_[k + 1]; ++q) s -= l_val_[q] * z[l_row_[q]];
      z[k] = s;
    }
    for (std::size_t k = 0; k < n_; ++k) x[piv_[k]] = z[k];
  }

  Vector solve_transpose(std::span<const double> b) const {
    Vector x(n_);
    solve_transpose(b, x);
    return x;
  }

 private:
  void factor(const CsrMatrix& A) {
    if (!A.square()) throw DimensionError("sparse_lu: matrix not square");
    n_ = A.rows();
    const CsrMatrix At = detail::transpose(A);  // rows of At are columns of A
    piv_.assign(n_, 0);
    std::vector<std::size_t> pinv(n_, n_);
    Vector x(n_, 0.0);
    std::vector<std::size_t> mark(n_, n_), touched;
    l_ptr_.assign(1, 0);
    u_ptr_.assign(1, 0);
    u_diag_.assign(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      touched.clear();
      auto touch = [&](std::size_t i) {
        if (mark[i] != j) {
          mark[i] = j;
          x[i] = 0.0;
          touched.push_back(i);
        }
      };
      auto cols = At.row_cols(j);
      auto vals = At.row_values(j);
      for (std::size_t q = 0; q < cols.size(); ++q) {
        touch(cols[q]);
        x[cols[q]] = vals[q];
      }
      for (std::size_t k = 0; k < j; ++k) {
        const std::size_t r = piv_[k];
        if (mark[r] != j || x[r] == 0.0) continue;
        const double ukj = x[r];
        u_row_.push_back(k);
        u_val_.push_back(ukj);
        for (std::size_t q = l_ptr_[k]; q < l_ptr_[k + 1]; ++q) {
          touch(l_row_[q]);
          x[l_row_[q]] -= l_val_[q] * ukj;
        }
      }
      u_ptr_.push_back(u_row_.size());
      std::size_t p = n_;
      double best = 0.0;
      for (std::size_t i : touched) {
        if (pinv[i] != n_) continue;
        if (std::abs(x[i]) > best) {
          best = std::abs(x[i]);
          p = i;
        }
      }
      if (p == n_ || !std::isfinite(best))
        throw FactorizationError("sparse_lu: matrix is singular", j);
      piv_[j] = p;
      pinv[p] = j;
      const double d = x[p];
      u_diag_[j] = d;
      for (std::size_t i : touched) {
        if (pinv[i] != n_ || x[i] == 0.0) continue;
        l_row_.push_back(i);
        l_val_.push_back(x[i] / d);
      }
      l_ptr_.push_back(l_row_.size());
    }
    for (auto& r : l_row_) r = pinv[r];
  }

  std::size_t n_ = 0;
  std::vector<std::size_t> piv_;
  std::vector<std::size_t> l_ptr_, l_row_;
  Vector l_val_;
  std::vector<std::size_t> u_ptr_, u_row_;
  Vector u_val_, u_diag_;
};

/// Left-looking Cholesky A = L L^T. With droptol > 0 it becomes a threshold
/// incomplete factorization: an off-diagonal entry of the eliminated row j is
/// discarded when its magnitude (before scaling by the pivot) is below
/// droptol * ||A(j,:)||_2. droptol = 0 gives the exact factor.
class SparseCholesky {
 public:
  explicit SparseCholesky(const CsrMatrix& A, double droptol = 0.0) { factor(A, droptol); }

  std::size_t dim() const noexcept { return n_; }
  std::size_t fill() const noexcept { return val_.size() + n_; }

  void solve(std::span<const double> b, std::span<double> x) const {
    detail::require_same_length(b.size(), n_, "SparseCholesky::solve");
    detail::require_same_length(x.size(), n_, "SparseCholesky::solve");
    Vector w(b.begin(), b.end());
    for (std::size_t j = 0; j < n_; ++j) {
      w[j] /= diag_[j];
      const double wj = w[j];
      if (wj == 0.0) continue;
      for (std::size_t q = ptr_[j]; q < ptr_[j + 1]; ++q) w[row_[q]] -= val_[q] * wj;
    }
    for (std::size_t j = n_; j-- > 0;) {
      double s = w[j];
      for (std::size_t q = ptr_[j]; q < ptr_[j + 1]; ++q) s -= val_[q] * w[row_[q]];
      w[j] = s / diag_[j];
    }
    std::copy(w.begin(), w.end(), x.begin());
  }

  Vector solve(std::span<const double> b) const {
    Vector x(n_);
    solve(b, x);
    return x;
  }

 private:
  void factor(const CsrMatrix& A, double droptol) {
    if (!A.square()) throw DimensionError("sparse_cholesky: matrix not square");
    if (asymmetry(A) > 1e-12) throw Error("sparse_cholesky: matrix not symmetric");
    n_ = A.rows();
    struct RowRef {
      std::size_t col;
      std::size_t pos;
    };
    std::vector<std::vector<RowRef>> row_refs(n_);
    Vector x(n_, 0.0);
    std::vector<std::size_t> mark(n_, n_), touched;
    ptr_.assign(1, 0);
    diag_.assign(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      touched.clear();
      auto touch = [&](std::size_t i) {
        if (mark[i] != j) {
          mark[i] = j;
          x[i] = 0.0;
          touched.push_back(i);
        }
      };
      auto cols = A.row_cols(j);
      auto vals = A.row_values(j);
      for (std::size_t q = 0; q < cols.size(); ++q) {
        if (cols[q] < j) continue;
        touch(cols[q]);
        x[cols[q]] = vals[q];
      }
      touch(j);
      for (const RowRef& ref : row_refs[j]) {
        const double ljk = val_[ref.pos];
        for (std::size_t q = ref.pos; q < ptr_[ref.col + 1]; ++q) {
          touch(row_[q]);
          x[row_[q]] -= val_[q] * ljk;
        }
      }
      const double d = x[j];
      if (!(d > 0.0) || !std::isfinite(d))
        throw FactorizationError("sparse_cholesky: nonpositive pivot", j);
      const double ljj = std::sqrt(d);
      diag_[j] = ljj;
      const double threshold = droptol > 0.0 ? droptol * row_norm2(A, j) : 0.0;
      std::sort(touched.begin(), touched.end());
      for (std::size_t i : touched) {
        if (i <= j) continue;
        const double v = x[i];
        if (v == 0.0 || std::abs(v) < threshold) continue;
        row_refs[i].push_back({j, row_.size()});
        row_.push_back(i);
        val_.push_back(v / ljj);
      }
      ptr_.push_back(row_.size());
    }
  }

  std::size_t n_ = 0;
  std::vector<std::size_t> ptr_, row_;
  Vector val_, diag_;
};

/// Row-oriented (IKJ) threshold incomplete LU without pivoting. Entries of the
/// row being eliminated are dropped when below droptol * ||A(i,:)||_2, the
/// multipliers measured before division by the pivot. droptol = 0 is exact LU.
class IncompleteLU {
 public:
  IncompleteLU(const CsrMatrix& A, double droptol) { factor(A, droptol); }

  std::size_t dim() const noexcept { return n_; }
  std::size_t fill() const noexcept { return l_val_.size() + u_val_.size() + n_; }

  void solve(std::span<const double> b, std::span<double> x) const {
    detail::require_same_length(b.size(), n_, "IncompleteLU::solve");
    detail::require_same_length(x.size(), n_, "IncompleteLU::solve");
    Vector w(b.begin(), b.end());
    for (std::size_t i = 0; i < n_; ++i) {
      double s = w[i];
      for (std::size_t q = l_ptr_[i]; q < l_ptr_[i + 1]; ++q) s -= l_val_[q] * w[l_col_[q]];
      w[i] = s;
    }
    for (std::size_t i = n_; i-- > 0;) {
      double s = w[i];
      for (std::size_t q = u_ptr_[i]; q < u_ptr_[i + 1]; ++q) s -= u_val_[q] * w[u_col_[q]];
      w[i] = s / u_diag_[i];
    }
    std::copy(w.begin(), w.end(), x.begin());
  }

  Vector solve(std::span<const double> b) const {
    Vector x(n_);
    solve(b, x);
    return x;
  }

 private:
  void factor(const CsrMatrix& A, double droptol) {
    if (!A.square()) throw DimensionError("ilu: matrix not square");
    n_ = A.rows();
    Vector w(n_, 0.0);
    std::vector<std::size_t> mark(n_, n_), touched;
    std::set<std::size_t> lower;
    l_ptr_.assign(1, 0);
    u_ptr_.assign(1, 0);
    u_diag_.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      touched.clear();
      lower.clear();
      auto touch = [&](std::size_t j) {
        if (mark[j] != i) {
          mark[j] = i;
          w[j] = 0.0;
          touched.push_back(j);
          if (j < i) lower.insert(j);
        }
      };
      auto cols = A.row_cols(i);
      auto vals = A.row_values(i);
      for (std::size_t q = 0; q < cols.size(); ++q) {
        touch(cols[q]);
        w[cols[q]] = vals[q];
      }
      touch(i);
      const double anorm = row_norm2(A, i);
      const double threshold = droptol > 0.0 ? droptol * anorm : 0.0;
      while (!lower.empty()) {
        const std::size_t k = *lower.begin();
        lower.erase(lower.begin());
        const double wk = w[k];
        if (wk == 0.0 || std::abs(wk) < threshold) continue;
        const double mult = wk / u_diag_[k];
        l_col_.push_back(k);
        l_val_.push_back(mult);
        for (std::size_t q = u_ptr_[k]; q < u_ptr_[k + 1]; ++q) {
          touch(u_col_[q]);
          w[u_col_[q]] -= mult * u_val_[q];
        }
      }
      l_ptr_.push_back(l_col_.size());
      const double d = w[i];
      if (!std::isfinite(d) || std::abs(d) <= 1e-14 * anorm || d == 0.0)
        throw FactorizationError("ilu: zero pivot", i);
      u_diag_[i] = d;
      std::sort(touched.begin(), touched.end());
      for (std::size_t j : touched) {
        if (j <= i) continue;
        const double v = w[j];
        if (v == 0.0 || std::abs(v) < threshold) continue;
        u_col_.push_back(j);
        u_val_.push_back(v);
      }
      u_ptr_.push_back(u_col_.size());
    }
  }

  std::size_t n_ = 0;
  std::vector<std::size_t> l_ptr_, l_col_;
  Vector l_val_;
  std::vector<std::size_t> u_ptr_, u_col_;
  Vector u_val_, u_diag_;
};

/// True when the (symmetric) matrix admits a Cholesky factorization.
inline bool is_positive_definite(const CsrMatrix& A) {
  try {
    SparseCholesky chol(A);
    return true;
  } catch (const FactorizationError&) {
    return false;
  }
}

}  // namespace uzawa
