#include <gtest/gtest.h>

#include <memory>
#include <random>

#include "support/oracles.hpp"
#include "uzawa/diagnostics/spectral.hpp"
#include "uzawa/operators/apply_operator.hpp"
#include "uzawa/operators/preconditioners.hpp"
#include "uzawa/operators/schur.hpp"

using namespace uzawa;
using oracle::Mat;

namespace {

CsrMatrix laplacian_2d(std::size_t k) {
  std::vector<Triplet> t;
  auto id = [k](std::size_t i, std::size_t j) { return j * k + i; };
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < k; ++i) {
      t.push_back({id(i, j), id(i, j), 4.0});
      if (i > 0) t.push_back({id(i, j), id(i - 1, j), -1.0});
      if (i + 1 < k) t.push_back({id(i, j), id(i + 1, j), -1.0});
      if (j > 0) t.push_back({id(i, j), id(i, j - 1), -1.0});
      if (j + 1 < k) t.push_back({id(i, j), id(i, j + 1), -1.0});
    }
  return CsrMatrix::from_triplets(k * k, k * k, std::move(t));
}

CsrMatrix tridiagonal_spd(std::size_t n) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < n; ++i) {
    t.push_back({i, i, 2.5});
    if (i + 1 < n) {
      t.push_back({i, i + 1, -1.0});
      t.push_back({i + 1, i, -1.0});
    }
  }
  return CsrMatrix::from_triplets(n, n, std::move(t));
}

/// Spectral radius of I - P^{-1} A by power iteration in the A-norm (the
/// iteration matrix is A-self-adjoint when P is symmetric).
double contraction_factor(const ApplyOperator& P, const CsrMatrix& A, std::mt19937_64& rng) {
  Vector x = oracle::random_vec(A.rows(), rng);
  auto a_norm = [&](const Vector& v) { return std::sqrt(dot(spmv(A, v), v)); };
  double ratio = 0.0;
  for (int it = 0; it < 400; ++it) {
    const double before = a_norm(x);
    Vector y = x;
    axpy(-1.0, P(spmv(A, x)), y);
    ratio = a_norm(y) / before;
    x = scaled(1.0 / a_norm(y), y);
  }
  return ratio;
}

/// |<Op x, y> - <x, Op y>| relative to ||x|| ||y|| ||Op||, worst over 50 pairs.
double adjoint_defect(const ApplyOperator& op, std::mt19937_64& rng) {
  double worst = 0.0, opnorm = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Vector x = oracle::random_vec(op.dim(), rng), y = oracle::random_vec(op.dim(), rng);
    const Vector ox = op(x), oy = op(y);
    opnorm = std::max(opnorm, norm2(ox) / norm2(x));
    worst = std::max(worst, std::abs(dot(ox, y) - dot(x, oy)) / (norm2(x) * norm2(y)));
  }
  return worst / std::max(opnorm, 1e-300);
}

}  // namespace

// --- basic operator contract ---------------------------------------------------

TEST(ApplyOperatorContract, DimensionAndInnerProducts) {
  const ApplyOperator I = identity_operator(3);
  const Vector x{1, -2, 5};
  EXPECT_EQ(I(x), x);
  EXPECT_EQ(m_inner(I, x, x), dot(x, x));
  const ApplyOperator D(
      2, [](std::span<const double> in, std::span<double> out) { out[0] = 2 * in[0], out[1] = 3 * in[1]; }, true,
      true, "diag(2,3)");
  EXPECT_EQ(m_inner(D, Vector{1, 1}, Vector{1, 1}), 5.0);
  EXPECT_THROW(I(Vector{1, 2}), DimensionError);
  const ApplyOperator N(1, [](std::span<const double> in, std::span<double> out) { out[0] = in[0]; }, false, false);
  EXPECT_THROW(m_inner(N, Vector{1}, Vector{1}), Error);
  EXPECT_EQ(scaled_operator(4.0, I)(x), (Vector{4, -8, 20}));
}

// --- Jacobi ---------------------------------------------------------------------

TEST(Jacobi, HandExamplesAndPositivity) {
  EXPECT_EQ(build_jacobi(CsrMatrix::diagonal(Vector{2, 4}))(Vector{2, 4}), (Vector{1, 1}));
  EXPECT_EQ(build_jacobi(CsrMatrix::identity(3))(Vector{1, 2, 3}), (Vector{1, 2, 3}));
  std::mt19937_64 rng(30);
  const ApplyOperator P = build_jacobi(oracle::to_csr(oracle::random_spd(20, rng)));
  EXPECT_TRUE(P.definite());
  for (int t = 0; t < 50; ++t) {
    const Vector x = oracle::random_vec(20, rng);
    EXPECT_GT(dot(P(x), x), 0.0);
  }
}

TEST(Jacobi, ZeroDiagonalNamesTheRow) {
  const CsrMatrix A = CsrMatrix::from_triplets(3, 3, {{0, 0, 1}, {1, 2, 1}, {2, 2, 1}});
  try {
    build_jacobi(A);
    FAIL() << "expected FactorizationError";
  } catch (const FactorizationError& e) {
    EXPECT_EQ(e.pivot(), 1u);
  }
}

// --- incomplete factorizations -----------------------------------------------------

TEST(IncompleteFactor, DiagonalMatrixGivesExactInverse) {
  const CsrMatrix D = CsrMatrix::diagonal(Vector{2, 5, 0.5});
  for (double tol : {0.0, 1e-4, 0.5}) {
    EXPECT_LE(oracle::rel_diff(build_incomplete_cholesky(D, tol)(Vector{2, 5, 1}), Vector{1, 1, 2}), 1e-15);
    EXPECT_LE(oracle::rel_diff(build_ilu(D, tol)(Vector{2, 5, 1}), Vector{1, 1, 2}), 1e-15);
  }
}

TEST(IncompleteFactor, ZeroDropToleranceMatchesExactFactor) {
  std::mt19937_64 rng(31);
  const CsrMatrix T = tridiagonal_spd(10);
  const ApplyOperator ic = build_incomplete_cholesky(T, 0.0);
  const SparseCholesky chol(T);
  for (int t = 0; t < 10; ++t) {
    const Vector b = oracle::random_vec(10, rng);
    EXPECT_LE(oracle::rel_diff(ic(b), chol.solve(b)), 1e-12);
  }
  // Nonsymmetric, diagonally dominant: no pivoting needed.
  Mat A = oracle::random_sparse(30, 30, 0.2, rng);
  for (std::size_t i = 0; i < 30; ++i) A(i, i) = 10.0;
  const CsrMatrix C = oracle::to_csr(A);
  const ApplyOperator ilu = build_ilu(C, 0.0);
  const SparseLU lu(C);
  for (int t = 0; t < 10; ++t) {
    const Vector b = oracle::random_vec(30, rng);
    EXPECT_LE(oracle::rel_diff(ilu(b), lu.solve(b)), 1e-12);
  }
}

TEST(IncompleteFactor, LaplacianContraction) {
  std::mt19937_64 rng(32);
  const CsrMatrix L = laplacian_2d(16);
  const ApplyOperator ic = build_incomplete_cholesky(L, 1e-1);
  const double rho_ic = contraction_factor(ic, L, rng);
  EXPECT_LT(rho_ic, 1.0);
  const double rho_jacobi = contraction_factor(build_jacobi(L), L, rng);
  EXPECT_LT(rho_ic, rho_jacobi);
  const double rho_fine = contraction_factor(build_incomplete_cholesky(L, 1e-4), L, rng);
  EXPECT_LT(rho_fine, rho_ic);
}

TEST(IncompleteFactor, ShiftRetryRecoversFromBreakdown) {
  // Symmetric but indefinite: plain IC fails at the second pivot.
  const CsrMatrix A = CsrMatrix::from_triplets(2, 2, {{0, 0, 1}, {0, 1, 2}, {1, 0, 2}, {1, 1, 1}});
  const IncompleteFactorBuild b = build_incomplete_cholesky_detailed(A, 0.0);
  EXPECT_GT(b.retries, 0);
  EXPECT_GT(b.shift, 1.0);
  EXPECT_EQ(b.shift, 1e-3 * std::pow(2.0, b.retries - 1));
  const Vector y = b.op(Vector{1, 1});
  EXPECT_TRUE(all_finite(y));
  EXPECT_THROW(build_incomplete_cholesky(A, 0.0, ShiftRetry{1e-3, 0}), FactorizationError);
  EXPECT_THROW(build_incomplete_cholesky(A, 0.0, ShiftRetry{1e-3, 3}), FactorizationError);
}

// --- exact solver and scaled identity ---------------------------------------------

TEST(ExactSolver, HandExamplesAndResidual) {
  EXPECT_LE(oracle::rel_diff(build_exact_solver(CsrMatrix::identity(2))(Vector{3, 4}), Vector{3, 4}), 1e-15);
  EXPECT_LE(oracle::rel_diff(build_exact_solver(CsrMatrix::diagonal(Vector{2, 5}))(Vector{4, 10}), Vector{2, 2}), 1e-15);
  std::mt19937_64 rng(33);
  const CsrMatrix A = oracle::to_csr(oracle::random_nonsymmetric_spd_part(25, rng, 1.0));
  const ApplyOperator P = build_exact_solver(A);
  EXPECT_FALSE(P.symmetric());
  for (int t = 0; t < 20; ++t) {
    const Vector x = oracle::random_vec(25, rng);
    EXPECT_LE(norm2(subtract(spmv(A, P(x)), x)), 1e-10 * norm2(x));
  }
  EXPECT_TRUE(build_exact_solver(oracle::to_csr(oracle::random_spd(5, rng))).symmetric());
}

TEST(ScaledIdentity, HandExamples) {
  EXPECT_EQ(build_scaled_identity(3, 1.0)(Vector{1, 2, 3}), (Vector{1, 2, 3}));
  EXPECT_EQ(build_scaled_identity(1, 4.0)(Vector{8}), (Vector{2}));
  EXPECT_THROW(build_scaled_identity(1, 0.0), ConfigError);
  EXPECT_THROW(PreconditionerSpec::scaled_identity(-1.0).validate(), ConfigError);
}

TEST(PreconditionerSpecs, LabelsAndDispatch) {
  EXPECT_EQ(PreconditionerSpec::jacobi().label(), "Jacobi");
  EXPECT_EQ(PreconditionerSpec::exact().label(), "Exact");
  EXPECT_EQ(PreconditionerSpec::ic(0.1).label(), "Cholinc(0.1)");
  EXPECT_EQ(PreconditionerSpec::ilu(0.1).label(), "Ilu(0.1)");
  const CsrMatrix D = CsrMatrix::diagonal(Vector{2, 4});
  for (const auto& s : {PreconditionerSpec::jacobi(), PreconditionerSpec::ic(1e-4), PreconditionerSpec::ilu(1e-4),
                        PreconditionerSpec::exact()})
    EXPECT_LE(oracle::rel_diff(build_preconditioner(s, D)(Vector{2, 4}), Vector{1, 1}), 1e-15) << s.label();
  EXPECT_LE(oracle::rel_diff(build_preconditioner(PreconditionerSpec::scaled_identity(2.0), D)(Vector{2, 4}), Vector{1, 2}), 1e-15);
}

// --- Schur operators ---------------------------------------------------------------

TEST(Schur, DegenerateCases) {
  SaddleSystem sys;
  sys.A = CsrMatrix::identity(3);
  sys.B = CsrMatrix::zero(3, 2);
  sys.D = CsrMatrix::from_triplets(2, 2, {{0, 0, 2}, {0, 1, 1}, {1, 0, 1}, {1, 1, 3}});
  const ApplyOperator H = schur_operator(sys, identity_operator(3), SchurKind::H);
  EXPECT_EQ(H(Vector{1, -1}), (Vector{1, -2}));

  SaddleSystem s2;
  s2.A = CsrMatrix::identity(2);
  s2.B = CsrMatrix::identity(2);
  s2.D = CsrMatrix::zero(2, 2);
  EXPECT_EQ(schur_operator(s2, identity_operator(2), SchurKind::M)(Vector{3, 4}), (Vector{3, 4}));
  EXPECT_THROW(schur_operator(s2, identity_operator(3), SchurKind::H), DimensionError);
}

TEST(Schur, HMatchesDenseAssembly) {
  std::mt19937_64 rng(34);
  const oracle::Planted p = oracle::planted_system(20, 8, rng, 0.5, 3);
  const Mat As = oracle::sym(p.A);
  const Mat want = oracle::dense_schur(As, p.B, p.D);
  const ApplyOperator H = schur_operator(p.sys, build_exact_solver(symmetric_part(p.sys.A)), SchurKind::H);
  const DenseMatrix got = to_dense(H);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(got(i, j), want(i, j), 1e-11 * oracle::max_abs(want));

  const auto lu = std::make_shared<const SparseLU>(p.sys.A);
  const Mat S_want = oracle::dense_schur(p.A, p.B, p.D);
  const DenseMatrix S_got = to_dense(schur_operator(p.sys, inverse_operator(lu), SchurKind::S));
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(S_got(i, j), S_want(i, j), 1e-11 * oracle::max_abs(S_want));
}

TEST(Schur, SymmetricFlaggedOperatorsPassAdjointCheck) {
  std::mt19937_64 rng(35);
  const oracle::Planted p = oracle::planted_system(24, 9, rng, 0.8, 2);
  const CsrMatrix As = symmetric_part(p.sys.A);
  const auto lu = std::make_shared<const SparseLU>(p.sys.A);
  std::vector<ApplyOperator> ops{
      build_jacobi(As),
      build_incomplete_cholesky(As, 1e-2),
      build_exact_solver(As),
      build_scaled_identity(9, 3.0),
      symmetrized_inverse_operator(lu),
      schur_operator(p.sys, build_exact_solver(As), SchurKind::H),
      schur_operator(p.sys, build_incomplete_cholesky(As, 1e-2), SchurKind::M),
      schur_operator(p.sys, symmetrized_inverse_operator(lu), SchurKind::Ss),
  };
  for (const auto& op : ops) {
    ASSERT_TRUE(op.symmetric()) << op.name();
    EXPECT_LE(adjoint_defect(op, rng), 1e-10) << op.name();
  }
  EXPECT_FALSE(schur_operator(p.sys, inverse_operator(lu), SchurKind::S).symmetric());
}

TEST(Schur, PositiveOnRandomVectors) {
  std::mt19937_64 rng(36);
  const oracle::Planted p = oracle::planted_system(30, 10, rng, 1.5, 0);
  const CsrMatrix As = symmetric_part(p.sys.A);
  const auto lu = std::make_shared<const SparseLU>(p.sys.A);
  const std::vector<ApplyOperator> ops{
      schur_operator(p.sys, build_exact_solver(As), SchurKind::H),
      schur_operator(p.sys, build_jacobi(As), SchurKind::M),
      schur_operator(p.sys, symmetrized_inverse_operator(lu), SchurKind::Ss),
  };
  for (const auto& op : ops) {
    EXPECT_TRUE(op.definite()) << op.name();
    for (int t = 0; t < 100; ++t) {
      const Vector v = oracle::random_vec(10, rng);
      EXPECT_GT(dot(op(v), v), 0.0) << op.name();
    }
  }
}

TEST(Schur, ApproximationMatrixAndPreconditionerKinds) {
  std::mt19937_64 rng(37);
  const oracle::Planted p = oracle::planted_system(12, 5, rng, 0.2, 2);
  Mat Dg(12, 12);
  for (std::size_t i = 0; i < 12; ++i) Dg(i, i) = p.A(i, i);
  const Mat want = oracle::dense_schur(Dg, p.B, p.D);
  const Mat got = oracle::from_csr(schur_approximation_matrix(p.sys));
  for (std::size_t k = 0; k < want.a.size(); ++k) EXPECT_NEAR(got.a[k], want.a[k], 1e-12 * oracle::max_abs(want));
  const Vector v = oracle::random_vec(5, rng);
  const Vector direct = SparseLU(oracle::to_csr(want)).solve(v);
  EXPECT_LE(oracle::rel_diff(build_schur_preconditioner(PreconditionerSpec::exact(), p.sys)(v), direct), 1e-10);
  EXPECT_EQ(build_schur_preconditioner(PreconditionerSpec::scaled_identity(2.0), p.sys)(v), scaled(0.5, v));
}

// --- symmetrized inverse sandwich ----------------------------------------------------

TEST(SymmetrizedInverse, SandwichBetweenInverseOfSymmetricPart) {
  std::mt19937_64 rng(38);
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t n = 5 + inst;
    const Mat A = oracle::random_nonsymmetric_spd_part(n, rng, 0.2 + 0.1 * inst);
    const double alpha = compute_alpha(oracle::to_csr(A));
    const Mat Ainv_s = oracle::sym(oracle::inverse(A));
    const Mat As_inv = oracle::inverse(oracle::sym(A));
    for (int t = 0; t < 100; ++t) {
      const oracle::Vec w = oracle::random_vec(n, rng);
      const double lo = oracle::dotv(oracle::mul(Ainv_s, w), w);
      const double mid = oracle::dotv(oracle::mul(As_inv, w), w);
      ASSERT_LE(lo, mid * (1 + 1e-9));
      ASSERT_LE(mid, alpha * alpha * lo * (1 + 1e-9));
    }
  }
}
