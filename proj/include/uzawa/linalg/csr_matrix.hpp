#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "uzawa/error.hpp"
#include "uzawa/linalg/vector.hpp"

namespace uzawa {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed sparse row matrix. Immutable once constructed; the constructor
/// enforces sorted, duplicate-free column indices in every row.
class CsrMatrix {
 public:
  CsrMatrix() : row_ptr_{0} {}

  CsrMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<std::size_t> row_ptr,
            std::vector<std::size_t> col_idx, std::vector<double> values)
      : n_rows_(n_rows),
        n_cols_(n_cols),
        row_ptr_(std::move(row_ptr)),
        col_idx_(std::move(col_idx)),
        values_(std::move(values)) {
    validate();
  }

  /// Assembles from unordered triplets; repeated (row, col) pairs are summed.
  static CsrMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                 std::vector<Triplet> entries) {
    for (const auto& t : entries) {
      if (t.row >= n_rows || t.col >= n_cols) {
        std::ostringstream msg;
        msg << "triplet (" << t.row << ", " << t.col << ") outside " << n_rows << "x"
            << n_cols;
        throw DimensionError(msg.str());
      }
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<std::size_t> row_ptr(n_rows + 1, 0);
    std::vector<std::size_t> col_idx;
    std::vector<double> values;
    col_idx.reserve(entries.size());
    values.reserve(entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const auto& t = entries[k];
      if (k > 0 && entries[k - 1].row == t.row && entries[k - 1].col == t.col) {
        values.back() += t.value;
        continue;
      }
      col_idx.push_back(t.col);
      values.push_back(t.value);
      ++row_ptr[t.row + 1];
    }
    for (std::size_t i = 0; i < n_rows; ++i) row_ptr[i + 1] += row_ptr[i];
    return CsrMatrix(n_rows, n_cols, std::move(row_ptr), std::move(col_idx), std::move(values));
  }

  static CsrMatrix identity(std::size_t n) { return diagonal(Vector(n, 1.0)); }

  static CsrMatrix diagonal(std::span<const double> d) {
    const std::size_t n = d.size();
    std::vector<std::size_t> row_ptr(n + 1), col_idx(n);
    for (std::size_t i = 0; i < n; ++i) {
      row_ptr[i + 1] = i + 1;
      col_idx[i] = i;
    }
    return CsrMatrix(n, n, std::move(row_ptr), std::move(col_idx), Vector(d.begin(), d.end()));
  }

  static CsrMatrix zero(std::size_t n_rows, std::size_t n_cols) {
    return CsrMatrix(n_rows, n_cols, std::vector<std::size_t>(n_rows + 1, 0), {}, {});
  }

  std::size_t rows() const noexcept { return n_rows_; }
  std::size_t cols() const noexcept { return n_cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }
  bool square() const noexcept { return n_rows_ == n_cols_; }

  const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<std::size_t>& col_idx() const noexcept { return col_idx_; }
  const std::vector<double>& values() const noexcept { return values_; }

  std::span<const std::size_t> row_cols(std::size_t i) const {
    return {col_idx_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {values_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }

  /// Stored value at (i, j), or 0 when not stored.
  double at(std::size_t i, std::size_t j) const {
    auto cols = row_cols(i);
    auto it = std::lower_bound(cols.begin(), cols.end(), j);
    if (it == cols.end() || *it != j) return 0.0;
    return values_[row_ptr_[i] + static_cast<std::size_t>(it - cols.begin())];
  }

  Vector diagonal_values() const {
    Vector d(std::min(n_rows_, n_cols_), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
    return d;
  }

  friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;

 private:
  void validate() const {
    if (row_ptr_.size() != n_rows_ + 1 || row_ptr_.front() != 0)
      throw DimensionError("csr: row_ptr must have n_rows+1 entries starting at 0");
    if (row_ptr_.back() != col_idx_.size() || col_idx_.size() != values_.size())
      throw DimensionError("csr: row_ptr[n_rows] must equal nnz");
    for (std::size_t i = 0; i < n_rows_; ++i) {
      if (row_ptr_[i + 1] < row_ptr_[i]) throw DimensionError("csr: row_ptr decreasing");
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        if (col_idx_[k] >= n_cols_) {
          std::ostringstream msg;
          msg << "csr: column " << col_idx_[k] << " out of range in row " << i;
          throw DimensionError(msg.str());
        }
        if (k > row_ptr_[i] && col_idx_[k] <= col_idx_[k - 1]) {
          std::ostringstream msg;
          msg << "csr: columns not strictly increasing in row " << i;
          throw DimensionError(msg.str());
        }
      }
    }
  }

  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

/// y = A x, rows accumulated in index order.
inline void spmv(const CsrMatrix& A, std::span<const double> x, std::span<double> y) {
  if (A.cols() != x.size() || A.rows() != y.size()) {
    std::ostringstream msg;
    msg << "spmv: matrix is " << A.rows() << "x" << A.cols() << ", x has length " << x.size()
        << ", y has length " << y.size();
    throw DimensionError(msg.str());
  }
  const auto& rp = A.row_ptr();
  const auto& ci = A.col_idx();
  const auto& va = A.values();
  for (std::size_t i = 0; i < A.rows(); ++i) {
    double s = 0.0;
    for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) s += va[k] * x[ci[k]];
    y[i] = s;
  }
}

inline Vector spmv(const CsrMatrix& A, std::span<const double> x) {
  Vector y(A.rows());
  spmv(A, x, y);
  return y;
}

/// y = A^T x without forming A^T.
inline void spmv_transpose(const CsrMatrix& A, std::span<const double> x, std::span<double> y) {
  if (A.rows() != x.size() || A.cols() != y.size()) {
    std::ostringstream msg;
    msg << "spmv_transpose: matrix is " << A.rows() << "x" << A.cols() << ", x has length "
        << x.size() << ", y has length " << y.size();
    throw DimensionError(msg.str());
  }
  std::fill(y.begin(), y.end(), 0.0);
  const auto& rp = A.row_ptr();
  const auto& ci = A.col_idx();
  const auto& va = A.values();
  for (std::size_t i = 0; i < A.rows(); ++i) {
    const double xi = x[i];
    for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) y[ci[k]] += va[k] * xi;
  }
}

inline Vector spmv_transpose(const CsrMatrix& A, std::span<const double> x) {
  Vector y(A.cols());
  spmv_transpose(A, x, y);
  return y;
}

namespace detail {

inline CsrMatrix transpose(const CsrMatrix& A) {
  std::vector<std::size_t> row_ptr(A.cols() + 1, 0);
  for (std::size_t c : A.col_idx()) ++row_ptr[c + 1];
  for (std::size_t j = 0; j < A.cols(); ++j) row_ptr[j + 1] += row_ptr[j];
  std::vector<std::size_t> next(row_ptr.begin(), row_ptr.end() - 1);
  std::vector<std::size_t> col_idx(A.nnz());
  std::vector<double> values(A.nnz());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    auto cols = A.row_cols(i);
    auto vals = A.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      std::size_t pos = next[cols[k]]++;
      col_idx[pos] = i;
      values[pos] = vals[k];
    }
  }
  return CsrMatrix(A.cols(), A.rows(), std::move(row_ptr), std::move(col_idx), std::move(values));
}

}  // namespace detail

/// (A + A^T) / 2 on the merged pattern. Floating-point addition commutes, so
/// entries (i,j) and (j,i) are bitwise equal.
inline CsrMatrix symmetric_part(const CsrMatrix& A) {
  if (!A.square()) {
    std::ostringstream msg;
    msg << "symmetric_part: matrix is " << A.rows() << "x" << A.cols() << ", not square";
    throw DimensionError(msg.str());
  }
  const CsrMatrix At = detail::transpose(A);
  const std::size_t n = A.rows();
  std::vector<std::size_t> row_ptr(n + 1, 0);
  std::vector<std::size_t> col_idx;
  std::vector<double> values;
  col_idx.reserve(2 * A.nnz());
  values.reserve(2 * A.nnz());
  for (std::size_t i = 0; i < n; ++i) {
    auto ac = A.row_cols(i);
    auto av = A.row_values(i);
    auto tc = At.row_cols(i);
    auto tv = At.row_values(i);
    std::size_t p = 0, q = 0;
    while (p < ac.size() || q < tc.size()) {
      std::size_t j;
      double a = 0.0, t = 0.0;
      if (q == tc.size() || (p < ac.size() && ac[p] < tc[q])) {
        j = ac[p];
        a = av[p++];
      } else if (p == ac.size() || tc[q] < ac[p]) {
        j = tc[q];
        t = tv[q++];
      } else {
        j = ac[p];
        a = av[p++];
        t = tv[q++];
      }
      col_idx.push_back(j);
      values.push_back(0.5 * (a + t));
    }
    row_ptr[i + 1] = col_idx.size();
  }
  return CsrMatrix(n, n, std::move(row_ptr), std::move(col_idx), std::move(values));
}

/// alpha * A + beta * B on the merged pattern.
inline CsrMatrix linear_combination(double alpha, const CsrMatrix& A, double beta,
                                    const CsrMatrix& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols())
    throw DimensionError("linear_combination: shapes differ");
  std::vector<std::size_t> row_ptr(A.rows() + 1, 0);
  std::vector<std::size_t> col_idx;
  std::vector<double> values;
  for (std::size_t i = 0; i < A.rows(); ++i) {
    auto ac = A.row_cols(i);
    auto av = A.row_values(i);
    auto bc = B.row_cols(i);
    auto bv = B.row_values(i);
    std::size_t p = 0, q = 0;
    while (p < ac.size() || q < bc.size()) {
      if (q == bc.size() || (p < ac.size() && ac[p] < bc[q])) {
        col_idx.push_back(ac[p]);
        values.push_back(alpha * av[p++]);
      } else if (p == ac.size() || bc[q] < ac[p]) {
        col_idx.push_back(bc[q]);
        values.push_back(beta * bv[q++]);
      } else {
        col_idx.push_back(ac[p]);
        values.push_back(alpha * av[p++] + beta * bv[q++]);
      }
    }
    row_ptr[i + 1] = col_idx.size();
  }
  return CsrMatrix(A.rows(), A.cols(), std::move(row_ptr), std::move(col_idx), std::move(values));
}

/// Maximum absolute column sum.
inline double norm1(const CsrMatrix& A) {
  Vector colsum(A.cols(), 0.0);
  for (std::size_t k = 0; k < A.nnz(); ++k) colsum[A.col_idx()[k]] += std::abs(A.values()[k]);
  return colsum.empty() ? 0.0 : *std::max_element(colsum.begin(), colsum.end());
}

inline double frobenius_norm(const CsrMatrix& A) {
  double s = 0.0;
  for (double v : A.values()) s += v * v;
  return std::sqrt(s);
}

inline double row_norm2(const CsrMatrix& A, std::size_t i) {
  double s = 0.0;
  for (double v : A.row_values(i)) s += v * v;
  return std::sqrt(s);
}

/// max |A - A^T| relative to max |A|.
inline double asymmetry(const CsrMatrix& A) {
  if (!A.square()) throw DimensionError("asymmetry: matrix not square");
  double scale = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < A.rows(); ++i) {
    auto cols = A.row_cols(i);
    auto vals = A.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      scale = std::max(scale, std::abs(vals[k]));
      diff = std::max(diff, std::abs(vals[k] - A.at(cols[k], i)));
    }
  }
  return scale == 0.0 ? 0.0 : diff / scale;
}

}  // namespace uzawa
