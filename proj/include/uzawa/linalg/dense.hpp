#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "uzawa/error.hpp"
#include "uzawa/linalg/csr_matrix.hpp"
#include "uzawa/linalg/vector.hpp"

namespace uzawa {

/// Largest dimension the dense diagnostics accept unless told otherwise.
inline constexpr std::size_t kDefaultDenseCap = 2000;

/// Row-major dense matrix, used only by desk-scale diagnostics.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix I(n, n);
    for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
  }

  static DenseMatrix from_csr(const CsrMatrix& A) {
    DenseMatrix M(A.rows(), A.cols());
    for (std::size_t i = 0; i < A.rows(); ++i) {
      auto cols = A.row_cols(i);
      auto vals = A.row_values(i);
      for (std::size_t k = 0; k < cols.size(); ++k) M(i, cols[k]) = vals[k];
    }
    return M;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  Vector column(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  DenseMatrix transposed() const {
    DenseMatrix T(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) T(j, i) = (*this)(i, j);
    return T;
  }

  /// Largest absolute entry.
  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Vector multiply(const DenseMatrix& M, std::span<const double> x) {
  detail::require_same_length(M.cols(), x.size(), "dense multiply");
  Vector y(M.rows(), 0.0);
  for (std::size_t i = 0; i < M.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < M.cols(); ++j) s += M(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

inline DenseMatrix multiply(const DenseMatrix& A, const DenseMatrix& B) {
  detail::require_same_length(A.cols(), B.rows(), "dense matmul");
  DenseMatrix C(A.rows(), B.cols());
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t k = 0; k < A.cols(); ++k) {
      const double a = A(i, k);
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < B.cols(); ++j) C(i, j) += a * B(k, j);
    }
  return C;
}

/// Replaces M by (M + M^T)/2.
inline void symmetrize(DenseMatrix& M) {
  for (std::size_t i = 0; i < M.rows(); ++i)
    for (std::size_t j = i + 1; j < M.cols(); ++j) {
      const double v = 0.5 * (M(i, j) + M(j, i));
      M(i, j) = v;
      M(j, i) = v;
    }
}

namespace detail {

using RowMajorXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const RowMajorXd> as_eigen(const DenseMatrix& M) {
  return {M.data().data(), static_cast<Eigen::Index>(M.rows()),
          static_cast<Eigen::Index>(M.cols())};
}

inline DenseMatrix from_eigen(const Eigen::MatrixXd& E) {
  DenseMatrix M(static_cast<std::size_t>(E.rows()), static_cast<std::size_t>(E.cols()));
  for (Eigen::Index i = 0; i < E.rows(); ++i)
    for (Eigen::Index j = 0; j < E.cols(); ++j)
      M(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = E(i, j);
  return M;
}

inline void require_within_cap(std::size_t n, std::size_t cap, const char* what) {
  if (n > cap) {
    std::ostringstream msg;
    msg << what << ": dimension " << n << " exceeds dense cap " << cap;
    throw CapExceededError(msg.str());
  }
}

inline void require_symmetric(const DenseMatrix& M, const char* what) {
  if (M.rows() != M.cols()) {
    std::ostringstream msg;
    msg << what << ": matrix is " << M.rows() << "x" << M.cols() << ", not square";
    throw DimensionError(msg.str());
  }
  const double scale = std::max(M.max_abs(), 1e-300);
  for (std::size_t i = 0; i < M.rows(); ++i)
    for (std::size_t j = i + 1; j < M.cols(); ++j)
      if (std::abs(M(i, j) - M(j, i)) > 1e-10 * scale) {
        std::ostringstream msg;
        msg << what << ": matrix not symmetric at (" << i << ", " << j << ")";
        throw Error(msg.str());
      }
}

}  // namespace detail

struct SymmetricEigen {
  Vector values;        ///< ascending
  DenseMatrix vectors;  ///< column k pairs with values[k]
};

/// Eigen-decomposition of a symmetric matrix.
inline SymmetricEigen dense_eig_sym(const DenseMatrix& M, std::size_t cap = kDefaultDenseCap) {
  detail::require_within_cap(M.rows(), cap, "dense_eig_sym");
  detail::require_symmetric(M, "dense_eig_sym");
  Eigen::MatrixXd E = detail::as_eigen(M);
  E = 0.5 * (E + E.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(E);
  if (solver.info() != Eigen::Success) throw Error("dense_eig_sym: eigensolver did not converge");
  SymmetricEigen out;
  out.values.assign(solver.eigenvalues().data(),
                    solver.eigenvalues().data() + solver.eigenvalues().size());
  out.vectors = detail::from_eigen(solver.eigenvectors());
  return out;
}

/// Eigenvalues (ascending) of the pencil M v = lambda N v, N SPD.
inline Vector dense_generalized_eig_sym(const DenseMatrix& M, const DenseMatrix& N,
                                        std::size_t cap = kDefaultDenseCap) {
  detail::require_within_cap(M.rows(), cap, "dense_generalized_eig_sym");
  detail::require_symmetric(M, "dense_generalized_eig_sym");
  detail::require_symmetric(N, "dense_generalized_eig_sym");
  detail::require_same_length(M.rows(), N.rows(), "dense_generalized_eig_sym");
  Eigen::MatrixXd Me = detail::as_eigen(M);
  Eigen::MatrixXd Ne = detail::as_eigen(N);
  Me = 0.5 * (Me + Me.transpose()).eval();
  Ne = 0.5 * (Ne + Ne.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> llt(Ne);
  if (llt.info() != Eigen::Success)
    throw Error("dense_generalized_eig_sym: N is not positive definite (Cholesky failed)");
  // L^{-1} M L^{-T} has the pencil's eigenvalues.
  Eigen::MatrixXd C = llt.matrixL().solve(Me);
  C = llt.matrixL().solve(C.transpose().eval()).transpose().eval();
  C = 0.5 * (C + C.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(C, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw Error("dense_generalized_eig_sym: eigensolver did not converge");
  return Vector(solver.eigenvalues().data(),
                solver.eigenvalues().data() + solver.eigenvalues().size());
}

/// Inverse of an SPD matrix via Cholesky.
inline DenseMatrix dense_spd_inverse(const DenseMatrix& M) {
  Eigen::MatrixXd E = detail::as_eigen(M);
  Eigen::LLT<Eigen::MatrixXd> llt(E);
  if (llt.info() != Eigen::Success) throw Error("dense_spd_inverse: matrix not positive definite");
  return detail::from_eigen(llt.solve(Eigen::MatrixXd::Identity(E.rows(), E.cols())));
}

}  // namespace uzawa
