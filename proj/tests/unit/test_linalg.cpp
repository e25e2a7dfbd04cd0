#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "support/oracles.hpp"
#include "uzawa/linalg/csr_matrix.hpp"
#include "uzawa/linalg/dense.hpp"
#include "uzawa/linalg/io.hpp"
#include "uzawa/linalg/sparse_factor.hpp"
#include "uzawa/linalg/vector.hpp"

using namespace uzawa;
using oracle::Mat;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("uzawa_linalg_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

// --- CSR structure ----------------------------------------------------------

TEST(Csr, FromTripletsSortsAndSumsRepeats) {
  const CsrMatrix A = CsrMatrix::from_triplets(2, 3, {{1, 2, 1.0}, {0, 1, 2.0}, {1, 0, 3.0}, {0, 1, 0.5}});
  EXPECT_EQ(A.row_ptr(), (std::vector<std::size_t>{0, 1, 3}));
  EXPECT_EQ(A.col_idx(), (std::vector<std::size_t>{1, 0, 2}));
  EXPECT_EQ(A.values(), (std::vector<double>{2.5, 3.0, 1.0}));
}

TEST(Csr, RejectsBrokenStructure) {
  EXPECT_THROW(CsrMatrix(2, 2, {0, 1}, {0}, {1.0}), DimensionError);
  EXPECT_THROW(CsrMatrix(1, 2, {0, 2}, {1, 1}, {1.0, 2.0}), DimensionError);
  EXPECT_THROW(CsrMatrix(1, 2, {0, 1}, {2}, {1.0}), DimensionError);
  EXPECT_THROW(CsrMatrix(2, 2, {0, 2, 1}, {0, 1}, {1.0, 1.0}), DimensionError);
  EXPECT_THROW(CsrMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), DimensionError);
}

// --- spmv -------------------------------------------------------------------

TEST(Spmv, IdentityAndZero) {
  EXPECT_EQ(spmv(CsrMatrix::identity(3), Vector{1, 2, 3}), (Vector{1, 2, 3}));
  EXPECT_EQ(spmv(CsrMatrix::zero(2, 2), Vector{5, 7}), (Vector{0, 0}));
}

TEST(Spmv, MatchesDenseProductOnRandom10x10) {
  std::mt19937_64 rng(11);
  const Mat A = oracle::random_sparse(10, 10, 0.4, rng);
  const oracle::Vec x = oracle::random_vec(10, rng);
  EXPECT_LE(oracle::rel_diff(spmv(oracle::to_csr(A), x), oracle::mul(A, x)), 1e-14);
}

TEST(Spmv, MatchesDenseProductOverManyShapes) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<std::size_t> dim(1, 50);
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t r = dim(rng), c = dim(rng);
    const Mat A = oracle::random_sparse(r, c, 0.3, rng);
    const oracle::Vec x = oracle::random_vec(c, rng);
    const oracle::Vec want = oracle::mul(A, x);
    const Vector got = spmv(oracle::to_csr(A), x);
    double scale = 0.0;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) scale = std::max(scale, std::abs(A(i, j) * x[j]));
    for (std::size_t i = 0; i < r; ++i) ASSERT_NEAR(got[i], want[i], 1e-13 * std::max(scale, 1.0) * c);
  }
}

TEST(SpmvTranspose, HandExamples) {
  EXPECT_EQ(spmv_transpose(CsrMatrix::identity(3), Vector{1, 2, 3}), (Vector{1, 2, 3}));
  const CsrMatrix A = CsrMatrix::from_triplets(2, 2, {{0, 1, 2.0}});
  EXPECT_EQ(spmv_transpose(A, Vector{3, 0}), (Vector{0, 6}));
}

TEST(SpmvTranspose, MatchesDenseTransposeOnRandom8x5) {
  std::mt19937_64 rng(13);
  const Mat A = oracle::random_sparse(8, 5, 0.5, rng);
  const oracle::Vec x = oracle::random_vec(8, rng);
  EXPECT_LE(oracle::rel_diff(spmv_transpose(oracle::to_csr(A), x), oracle::mul(oracle::transpose(A), x)), 1e-14);
}

TEST(SpmvTranspose, AdjointIdentity) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const Mat A = oracle::random_sparse(17, 9, 0.3, rng);
    const CsrMatrix C = oracle::to_csr(A);
    const oracle::Vec x = oracle::random_vec(17, rng), y = oracle::random_vec(9, rng);
    const double lhs = dot(spmv_transpose(C, x), y), rhs = dot(x, spmv(C, y));
    ASSERT_NEAR(lhs, rhs, 1e-13 * (std::abs(lhs) + std::abs(rhs) + 1.0));
  }
}

// --- symmetric part -----------------------------------------------------------

TEST(SymmetricPart, SymmetricMatrixIsFixedPoint) {
  std::mt19937_64 rng(15);
  const CsrMatrix S = oracle::to_csr(oracle::random_spd(6, rng));
  const CsrMatrix P = symmetric_part(S);
  EXPECT_EQ(P.row_ptr(), S.row_ptr());
  EXPECT_EQ(P.col_idx(), S.col_idx());
  EXPECT_EQ(P.values(), S.values());
}

TEST(SymmetricPart, SingleOffDiagonalEntry) {
  const CsrMatrix P = symmetric_part(CsrMatrix::from_triplets(2, 2, {{0, 1, 2.0}}));
  EXPECT_EQ(P.at(0, 0), 0.0);
  EXPECT_EQ(P.at(0, 1), 1.0);
  EXPECT_EQ(P.at(1, 0), 1.0);
  EXPECT_EQ(P.at(1, 1), 0.0);
}

TEST(SymmetricPart, MatchesDenseOracleAndIsIdempotent) {
  std::mt19937_64 rng(16);
  const Mat A = oracle::random_sparse(20, 20, 0.3, rng);
  const CsrMatrix P = symmetric_part(oracle::to_csr(A));
  const Mat want = oracle::sym(A);
  const Mat got = oracle::from_csr(P);
  for (std::size_t k = 0; k < want.a.size(); ++k) ASSERT_NEAR(got.a[k], want.a[k], 1e-15);
  const CsrMatrix PP = symmetric_part(P);
  EXPECT_EQ(PP.values(), P.values());
  EXPECT_EQ(PP.col_idx(), P.col_idx());
}

// --- vectors ------------------------------------------------------------------

TEST(Vectors, DotAndNorms) {
  EXPECT_EQ(dot(Vector{1, 2}, Vector{3, 4}), 11.0);
  EXPECT_EQ(norm2(Vector{3, 4}), 5.0);
  EXPECT_EQ(norm_inf(Vector{-7, 4}), 7.0);
  Vector y{1, 1};
  axpy(2.0, Vector{1, -1}, y);
  EXPECT_EQ(y, (Vector{3, -1}));
  EXPECT_THROW(dot(Vector{1}, Vector{1, 2}), DimensionError);
  EXPECT_FALSE(all_finite(Vector{1, std::numeric_limits<double>::infinity()}));
}

// --- dense eigen ----------------------------------------------------------------

TEST(DenseEig, DiagonalAndTextbookPair) {
  DenseMatrix D(3, 3);
  D(0, 0) = 3;
  D(1, 1) = 1;
  D(2, 2) = 2;
  const auto e = dense_eig_sym(D);
  ASSERT_EQ(e.values.size(), 3u);
  EXPECT_NEAR(e.values[0], 1.0, 1e-14);
  EXPECT_NEAR(e.values[1], 2.0, 1e-14);
  EXPECT_NEAR(e.values[2], 3.0, 1e-14);

  DenseMatrix M(2, 2);
  M(0, 0) = M(1, 1) = 2;
  M(0, 1) = M(1, 0) = 1;
  const auto p = dense_eig_sym(M);
  EXPECT_NEAR(p.values[0], 1.0, 1e-14);
  EXPECT_NEAR(p.values[1], 3.0, 1e-14);
  const Vector v = p.vectors.column(1);
  EXPECT_NEAR(std::abs(v[0]), std::sqrt(0.5), 1e-14);
  EXPECT_NEAR(v[0], v[1], 1e-14);
}

TEST(DenseEig, MatchesJacobiRotations) {
  std::mt19937_64 rng(17);
  const Mat S = oracle::sym(oracle::random_mat(12, 12, rng));
  const auto got = dense_eig_sym(DenseMatrix::from_csr(oracle::to_csr(S))).values;
  const auto want = oracle::jacobi_eigenvalues(S);
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-11);
}

namespace {

/// det(M - lambda N) for 3x3 matrices, expanded by cofactors.
double det3(const Mat& M, const Mat& N, double lambda) {
  double a[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a[i][j] = M(i, j) - lambda * N(i, j);
  return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
         a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

/// Real roots of the characteristic polynomial by scanning and bisection.
std::vector<double> pencil_roots(const Mat& M, const Mat& N) {
  const double bound = 1e3;
  const int samples = 200000;
  std::vector<double> roots;
  double prev_x = -bound, prev = det3(M, N, prev_x);
  for (int k = 1; k <= samples; ++k) {
    const double x = -bound + 2.0 * bound * k / samples;
    const double v = det3(M, N, x);
    if ((prev < 0) != (v < 0)) {
      double lo = prev_x, hi = x;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((det3(M, N, mid) < 0) == (det3(M, N, lo) < 0) ? lo : hi) = mid;
      }
      roots.push_back(0.5 * (lo + hi));
    }
    prev_x = x;
    prev = v;
  }
  return roots;
}

}  // namespace

TEST(DenseEig, GeneralizedPencilMatchesCharacteristicPolynomial) {
  std::mt19937_64 rng(18);
  for (int trial = 0; trial < 5; ++trial) {
    const Mat M = oracle::sym(oracle::random_mat(3, 3, rng));
    const Mat N = oracle::random_spd(3, rng);
    const auto got = dense_generalized_eig_sym(DenseMatrix::from_csr(oracle::to_csr(M)),
                                               DenseMatrix::from_csr(oracle::to_csr(N)));
    const auto want = pencil_roots(M, N);
    ASSERT_EQ(want.size(), 3u);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(got[i], want[i], 1e-9 * std::max(1.0, std::abs(want[i])));
  }
}

TEST(DenseEig, RefusesAboveCap) {
  EXPECT_THROW(dense_eig_sym(DenseMatrix::identity(5), 4), CapExceededError);
  DenseMatrix A(2, 2);
  A(0, 1) = 1.0;
  EXPECT_THROW(dense_eig_sym(A), Error);
}

TEST(DenseEig, PositiveSpectrumIffCholeskyAccepts) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 40; ++trial) {
    Mat S = oracle::sym(oracle::random_mat(8, 8, rng));
    const double shift = (trial % 2 == 0) ? 6.0 : -0.5;
    for (std::size_t i = 0; i < 8; ++i) S(i, i) += shift;
    const auto ev = oracle::jacobi_eigenvalues(S);
    if (std::abs(ev.front()) < 1e-6) continue;
    const auto lib = dense_eig_sym(DenseMatrix::from_csr(oracle::to_csr(S))).values;
    EXPECT_EQ(lib.front() >= -1e-12, is_positive_definite(oracle::to_csr(S))) << "trial " << trial;
  }
}

// --- sparse factorizations ------------------------------------------------------

TEST(SparseFactor, HandExamples) {
  for (const Vector& b : {Vector{1, 2, 3}, Vector{-4, 0, 9}}) {
    EXPECT_EQ(SparseLU(CsrMatrix::identity(3)).solve(b), b);
    EXPECT_EQ(SparseCholesky(CsrMatrix::identity(3)).solve(b), b);
  }
  const CsrMatrix D = CsrMatrix::diagonal(Vector{2, 4});
  EXPECT_LE(oracle::rel_diff(SparseLU(D).solve(Vector{2, 8}), Vector{1, 2}), 1e-15);
  EXPECT_LE(oracle::rel_diff(SparseCholesky(D).solve(Vector{2, 8}), Vector{1, 2}), 1e-15);
}

TEST(SparseFactor, DiagonallyDominantResidual) {
  std::mt19937_64 rng(20);
  Mat A = oracle::random_sparse(50, 50, 0.1, rng);
  for (std::size_t i = 0; i < 50; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 50; ++j) s += std::abs(A(i, j));
    A(i, i) = s + 1.0;
  }
  const CsrMatrix C = oracle::to_csr(A);
  const oracle::Vec b = oracle::random_vec(50, rng);
  const Vector x = SparseLU(C).solve(b);
  EXPECT_LE(norm2(subtract(spmv(C, x), b)), 1e-10);
  const Vector xt = SparseLU(C).solve_transpose(b);
  EXPECT_LE(norm2(subtract(spmv_transpose(C, xt), b)), 1e-10);
}

TEST(SparseFactor, BackwardErrorBound) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat A = oracle::random_nonsymmetric_spd_part(25, rng, 0.5);
    const Mat S = oracle::random_spd(25, rng);
    const oracle::Vec b = oracle::random_vec(25, rng);
    const CsrMatrix CA = oracle::to_csr(A), CS = oracle::to_csr(S);
    const Vector x = SparseLU(CA).solve(b);
    EXPECT_LE(norm2(subtract(spmv(CA, x), b)), 1e-10 * (norm1(CA) * norm2(x) + norm2(b)));
    const Vector y = SparseCholesky(CS).solve(b);
    EXPECT_LE(norm2(subtract(spmv(CS, y), b)), 1e-10 * (norm1(CS) * norm2(y) + norm2(b)));
  }
}

TEST(SparseFactor, SingularAndIndefiniteInputsFail) {
  EXPECT_THROW(SparseLU(CsrMatrix::zero(2, 2)), FactorizationError);
  const CsrMatrix indefinite = CsrMatrix::from_triplets(2, 2, {{0, 0, 1}, {0, 1, 2}, {1, 0, 2}, {1, 1, 1}});
  EXPECT_THROW(SparseCholesky{indefinite}, FactorizationError);
  EXPECT_FALSE(is_positive_definite(indefinite));
}

// --- file formats -----------------------------------------------------------------

TEST(MatrixMarket, RoundTripIsBitwise) {
  std::mt19937_64 rng(22);
  const auto dir = temp_dir("mm");
  Mat A = oracle::random_sparse(7, 4, 0.5, rng);
  A(6, 3) = 1.0 / 3.0;
  const CsrMatrix C = oracle::to_csr(A);
  io::write_matrix_market(dir / "a.mtx", C);
  const CsrMatrix R = io::read_matrix_market(dir / "a.mtx");
  EXPECT_EQ(R.rows(), 7u);
  EXPECT_EQ(R.cols(), 4u);
  EXPECT_EQ(R.row_ptr(), C.row_ptr());
  EXPECT_EQ(R.col_idx(), C.col_idx());
  EXPECT_EQ(R.values(), C.values());

  const CsrMatrix S = oracle::to_csr(oracle::random_spd(5, rng));
  io::write_matrix_market(dir / "s.mtx", S, io::MatrixSymmetry::symmetric);
  const CsrMatrix RS = io::read_matrix_market(dir / "s.mtx");
  EXPECT_EQ(RS.values(), S.values());
  EXPECT_THROW(io::write_matrix_market(dir / "bad.mtx", C, io::MatrixSymmetry::symmetric), IoError);
}

TEST(MatrixMarket, ReportsMissingAndMalformedFiles) {
  const auto dir = temp_dir("mm_bad");
  EXPECT_THROW(io::read_matrix_market(dir / "missing.mtx"), IoError);
  std::ofstream(dir / "junk.mtx") << "not a matrix\n";
  EXPECT_THROW(io::read_matrix_market(dir / "junk.mtx"), IoError);
}

TEST(VectorFiles, BinaryAndTextRoundTrip) {
  const auto dir = temp_dir("vec");
  const Vector x{1.0 / 3.0, -2.5e-300, 7e200, 0.0, -0.0};
  io::write_vector_binary(dir / "x.bin", x);
  io::write_vector_text(dir / "x.txt", x);
  for (const auto& name : {"x.bin", "x.txt"}) {
    const Vector r = io::read_vector(dir / name);
    ASSERT_EQ(r.size(), x.size());
    EXPECT_EQ(std::memcmp(r.data(), x.data(), x.size() * sizeof(double)), 0) << name;
  }
  EXPECT_THROW(io::read_vector(dir / "none.bin"), IoError);
}
