#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support/oracles.hpp"
#include "uzawa/diagnostics/spectral.hpp"
#include "uzawa/problems/oseen.hpp"

using namespace uzawa;
using oracle::Mat;

namespace {

ApplyOperator dense_op(const Mat& M) {
  return ApplyOperator(
      M.r,
      [M](std::span<const double> in, std::span<double> out) {
        const oracle::Vec y = oracle::mul(M, oracle::Vec(in.begin(), in.end()));
        std::copy(y.begin(), y.end(), out.begin());
      },
      true, true, "dense");
}

/// Lower Cholesky factor of an SPD oracle matrix.
Mat cholesky(const Mat& S) {
  const std::size_t n = S.r;
  Mat L(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = S(j, j);
    for (std::size_t k = 0; k < j; ++k) s -= L(j, k) * L(j, k);
    L(j, j) = std::sqrt(s);
    for (std::size_t i = j + 1; i < n; ++i) {
      double t = S(i, j);
      for (std::size_t k = 0; k < j; ++k) t -= L(i, k) * L(j, k);
      L(i, j) = t / L(j, j);
    }
  }
  return L;
}

/// sup <Ax, y> / (|x|_As |y|_As) as the largest singular value of L^{-1} A L^{-T}, via Jacobi rotations.
double oracle_alpha(const Mat& A) {
  const Mat L = cholesky(oracle::sym(A));
  const Mat Li = oracle::inverse(L);
  const Mat C = oracle::mul(oracle::mul(Li, A), oracle::transpose(Li));
  const oracle::Vec ev = oracle::jacobi_eigenvalues(oracle::mul(oracle::transpose(C), C));
  return std::sqrt(*std::max_element(ev.begin(), ev.end()));
}

double bilinear_ratio(const Mat& A, const oracle::Vec& x, const oracle::Vec& y) {
  const Mat As = oracle::sym(A);
  return oracle::dotv(oracle::mul(A, x), y) /
         std::sqrt(oracle::dotv(oracle::mul(As, x), x) * oracle::dotv(oracle::mul(As, y), y));
}

}  // namespace

// --- alpha ----------------------------------------------------------------------------

TEST(Alpha, SymmetricMatrixGivesOne) {
  std::mt19937_64 rng(70);
  for (int t = 0; t < 5; ++t) EXPECT_NEAR(compute_alpha(oracle::to_csr(oracle::random_spd(12, rng))), 1.0, 1e-12);
}

TEST(Alpha, RotationExample) {
  const CsrMatrix A = CsrMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, -1.0}, {1, 1, 1.0}});
  EXPECT_NEAR(compute_alpha(A), std::sqrt(2.0), 1e-13);
}

TEST(Alpha, MatchesOracleAndBoundsSampledRatios) {
  std::mt19937_64 rng(71);
  for (int inst = 0; inst < 10; ++inst) {
    const Mat A = oracle::random_nonsymmetric_spd_part(10, rng, 0.5 + inst);
    const AlphaResult r = compute_alpha_detailed(oracle::to_csr(A));
    const double want = oracle_alpha(A);
    EXPECT_NEAR(r.alpha, want, 1e-10 * want);
    for (int s = 0; s < 200; ++s) {
      const double ratio = bilinear_ratio(A, oracle::random_vec(10, rng), oracle::random_vec(10, rng));
      ASSERT_LE(std::abs(ratio), r.alpha * (1 + 1e-12));
    }
    const double attained = bilinear_ratio(A, r.x, r.y);
    EXPECT_NEAR(attained, r.alpha, 1e-10 * r.alpha);
    EXPECT_GT(attained, 0.999 * r.alpha);
  }
}

TEST(Alpha, RefusesAboveCapAndIndefiniteSymmetricPart) {
  EXPECT_THROW(compute_alpha(CsrMatrix::identity(5), 4), CapExceededError);
  EXPECT_THROW(compute_alpha(CsrMatrix::diagonal(Vector{1, -1})), Error);
}

// --- kappa ------------------------------------------------------------------------------

TEST(Kappa, HandExamplesAndScaleInvariance) {
  std::mt19937_64 rng(72);
  const Mat S = oracle::random_spd(7, rng);
  EXPECT_NEAR(compute_kappa(dense_op(oracle::inverse(S)), dense_op(S), 7), 1.0, 1e-10);
  Mat d(2, 2);
  d(0, 0) = 1;
  d(1, 1) = 4;
  EXPECT_NEAR(compute_kappa(identity_operator(2), dense_op(d), 2), 4.0, 1e-13);
  const Mat H = oracle::random_spd(7, rng);
  const double k1 = compute_kappa(dense_op(oracle::inverse(S)), dense_op(H), 7);
  for (double c : {1e-4, 3.0, 1e5})
    EXPECT_NEAR(compute_kappa(scaled_operator(c, dense_op(oracle::inverse(S))), dense_op(H), 7), k1, 1e-10 * k1);
  EXPECT_THROW(compute_kappa(identity_operator(3), dense_op(d), 2), DimensionError);
}

TEST(Kappa, MatchesOracleGeneralizedEigenvalues) {
  std::mt19937_64 rng(73);
  for (int inst = 0; inst < 10; ++inst) {
    const Mat S = oracle::random_spd(9, rng), H = oracle::random_spd(9, rng, 0.05);
    const Mat Li = oracle::inverse(cholesky(S));
    const oracle::Vec ev = oracle::jacobi_eigenvalues(oracle::mul(oracle::mul(Li, H), oracle::transpose(Li)));
    const auto [lo, hi] = std::minmax_element(ev.begin(), ev.end());
    const double k = compute_kappa(dense_op(oracle::inverse(S)), dense_op(H), 9);
    EXPECT_NEAR(k, *hi / *lo, 1e-9 * k);
  }
}

TEST(Kappa0, ExactAndJacobiOnDiagonal) {
  std::mt19937_64 rng(74);
  const CsrMatrix A = oracle::to_csr(oracle::random_spd(8, rng));
  EXPECT_NEAR(compute_kappa0(A, build_exact_solver(A)), 1.0, 1e-10);
  const CsrMatrix D = CsrMatrix::diagonal(Vector{1, 5, 9});
  EXPECT_NEAR(compute_kappa0(D, build_jacobi(D)), 1.0, 1e-13);
  EXPECT_NEAR(compute_kappa0(D, identity_operator(3)), 9.0, 1e-12);
}

// --- LBB constant -------------------------------------------------------------------------

TEST(LbbConstant, HandCasesAndMacGrid) {
  SaddleSystem s;
  s.A = CsrMatrix::identity(3);
  s.B = CsrMatrix::zero(3, 2);
  s.D = CsrMatrix::zero(2, 2);
  s.f = {0, 0, 0};
  s.g = {0, 0};
  EXPECT_EQ(compute_lbb_constant(s), 0.0);
  s.B = CsrMatrix::identity(3);
  s.D = CsrMatrix::zero(3, 3);
  s.g = {0, 0, 0};
  EXPECT_NEAR(compute_lbb_constant(s), 1.0, 1e-13);

  OseenSpec spec;
  spec.grid_n = 8;
  EXPECT_GT(compute_lbb_constant(generate_oseen(spec)), 1e-3);
  spec.pressure_fix = OseenSpec::PressureFix::project_constants;
  const SaddleSystem projected = generate_oseen(spec);
  EXPECT_GT(compute_lbb_constant(projected), 1e-3);
  SaddleSystem undeflated = projected;
  undeflated.constant_pressure_nullspace = false;
  EXPECT_EQ(compute_lbb_constant(undeflated), 0.0);
}

// --- windows -----------------------------------------------------------------------------

TEST(ExactWindow, ClosedFormValues) {
  const Theorem21Window w0 = theorem21_window(1.0, 0.0);
  EXPECT_EQ(w0.theta_max, 1.0);
  EXPECT_EQ(w0.rate(1.0), 0.0);
  EXPECT_DOUBLE_EQ(theorem21_window(1.0, 1.0 / 3.0).theta_max, 3.0 / 8.0);
  EXPECT_DOUBLE_EQ(theorem21_window(2.0, 1.0 / 3.0).theta_max, 3.0 / 32.0);
  EXPECT_DOUBLE_EQ(theorem21_window_ss(1.0, 1.0 / 3.0).theta_max, 3.0 / 8.0);
  EXPECT_DOUBLE_EQ(theorem21_window_ss(std::sqrt(2.0), 1.0 / 3.0).theta_max, 3.0 / 32.0);
  const Theorem21Window w = theorem21_window(1.5, 0.2);
  for (int k = 1; k < 100; ++k) {
    const double theta = w.theta_max * k / 100.0;
    EXPECT_GT(w.rate(theta), 0.0);
    EXPECT_LT(w.rate(theta), 1.0);
  }
}

TEST(InexactWindow, IdentityCaseAndUndefinedDelta) {
  const Theorem31Window w = theorem31_window(1.0, 1.0, 0.0, 0.3);
  ASSERT_TRUE(w.defined);
  EXPECT_DOUBLE_EQ(w.omega_max, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(w.omega_max_b, 0.85);
  EXPECT_DOUBLE_EQ(w.delta_bound_beta3, 0.25);
  EXPECT_DOUBLE_EQ(w.delta_bound_error, 0.25);
  EXPECT_TRUE(w.contains(0.3));
  EXPECT_FALSE(w.contains(0.34));
  for (double d : {0.0, 0.5, 0.7, -0.1}) {
    const Theorem31Window u = theorem31_window(1.0, 1.0, 0.0, d);
    EXPECT_FALSE(u.defined);
    EXPECT_FALSE(u.contains(0.1));
    EXPECT_FALSE(u.reason.empty());
  }
}

TEST(InexactWindow, RatesBelowOneAcrossWindow) {
  std::mt19937_64 rng(75);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int inst = 0; inst < 200; ++inst) {
    const double alpha = 1.0 + 3.0 * U(rng), kappa0 = 1.0 + 20.0 * U(rng), beta3 = 0.99 * U(rng);
    const double delta = 0.01 + 0.48 * U(rng);
    const Theorem31Window w = theorem31_window(alpha, kappa0, beta3, delta);
    ASSERT_TRUE(w.defined);
    for (int k = 1; k < 50; ++k) {
      const double omega = w.omega_max * k / 50.0;
      ASSERT_LT(w.omega_bar(omega), 1.0);
      const double rho = w.rho_bar(omega);
      ASSERT_LT(rho, 1.0);
      ASSERT_GT(rho, 0.0);
      // rho solves t^2 - (omega/2 - omega Delta) t - (1 - omega/2) = 0.
      const double a = omega / 2 - omega * w.Delta;
      ASSERT_NEAR(rho * rho - a * rho - (1 - omega / 2), 0.0, 1e-12);
    }
  }
}

// --- Kantorovich ---------------------------------------------------------------------------

TEST(Kantorovich, IdentityAndExtremalVector) {
  DenseMatrix I(4, 4);
  for (std::size_t i = 0; i < 4; ++i) I(i, i) = 1.0;
  EXPECT_NEAR(kantorovich_check(I, 50), 1.0, 1e-14);
  for (double kappa : {2.0, 10.0, 1e4}) {
    // v = (1, 1) attains the bound for diag(1, kappa).
    const double lhs = 4.0 / ((1.0 + kappa) * (1.0 + 1.0 / kappa));
    EXPECT_NEAR(lhs, 4.0 * kappa / ((1.0 + kappa) * (1.0 + kappa)), 1e-15);
    DenseMatrix G(2, 2);
    G(0, 0) = 1.0;
    G(1, 1) = kappa;
    EXPECT_GE(kantorovich_check(G, 1000, 3), 1.0 - 1e-12);
  }
}

TEST(Kantorovich, RandomSpdHoldsWithMargin) {
  std::mt19937_64 rng(76);
  const Mat G = oracle::random_spd(20, rng);
  DenseMatrix Gd(20, 20);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = 0; j < 20; ++j) Gd(i, j) = G(i, j);
  const double worst = kantorovich_check(Gd, 10000, 7);
  EXPECT_GE(worst, 1.0 - 1e-12);
  EXPECT_LT(worst, 1e6);
}

// --- report ------------------------------------------------------------------------------------

TEST(SpectralReport, BetaIdentitiesAndRanges) {
  std::mt19937_64 rng(77);
  const oracle::Planted p = oracle::planted_system(16, 6, rng, 0.8, 2);
  ReportInputs in;
  in.a_precond = PreconditionerSpec::ic(1e-2);
  in.omega = 0.05;
  in.delta = 0.2;
  const SpectralReport r = spectral_report(p.sys, in);
  ASSERT_TRUE(r.alpha && r.kappa0 && r.kappa1 && r.kappa2 && r.kappa3 && r.c0);
  EXPECT_GE(*r.alpha, 1.0 - 1e-12);
  for (auto [k, b] : {std::pair{r.kappa1, r.beta1}, {r.kappa2, r.beta2}, {r.kappa3, r.beta3}}) {
    EXPECT_GE(*k, 1.0 - 1e-12);
    EXPECT_DOUBLE_EQ(*b, (*k - 1) / (*k + 1));
    EXPECT_GE(*b, -1e-12);
    EXPECT_LT(*b, 1.0);
  }
  EXPECT_GE(*r.kappa0, 1.0 - 1e-12);
  EXPECT_GE(*r.c0, 0.0);
  EXPECT_DOUBLE_EQ(*r.theta_max, theorem21_window(*r.alpha, *r.beta1).theta_max);
  const Theorem31Window w = theorem31_window(*r.alpha, *r.kappa0, *r.beta3, 0.2);
  EXPECT_DOUBLE_EQ(*r.omega_max, w.omega_max);
  EXPECT_DOUBLE_EQ(*r.omega_bar, w.omega_bar(0.05));
  EXPECT_DOUBLE_EQ(*r.rho_bar, w.rho_bar(0.05));
  EXPECT_EQ(*r.delta_max, 0.5);
}

TEST(SpectralReport, CapLeavesPartialReport) {
  std::mt19937_64 rng(78);
  const oracle::Planted p = oracle::planted_system(12, 4, rng, 0.5, 0);
  ReportInputs in;
  in.cap = 8;
  const SpectralReport r = spectral_report(p.sys, in);
  EXPECT_FALSE(r.alpha);
  EXPECT_FALSE(r.kappa0);
  EXPECT_FALSE(r.c0);
  EXPECT_TRUE(r.kappa1);
  EXPECT_FALSE(r.notes.empty());
  in.cap = 2;
  const SpectralReport none = spectral_report(p.sys, in);
  EXPECT_FALSE(none.kappa1);
  EXPECT_FALSE(none.theta_max);
}

TEST(SpectralReport, ScaledSchurPreconditionerGivesSameConstants) {
  std::mt19937_64 rng(79);
  const oracle::Planted p = oracle::planted_system(14, 5, rng, 0.5, 1);
  ReportInputs a, b;
  b.schur_precond = PreconditionerSpec::scaled_identity(37.0);
  const SpectralReport ra = spectral_report(p.sys, a), rb = spectral_report(p.sys, b);
  EXPECT_NEAR(*rb.kappa1, *ra.kappa1, 1e-10 * *ra.kappa1);
  EXPECT_NEAR(*rb.kappa2, *ra.kappa2, 1e-10 * *ra.kappa2);
  EXPECT_NEAR(*rb.kappa3, *ra.kappa3, 1e-10 * *ra.kappa3);
}

TEST(SpectralReport, IsPureAndRepeatable) {
  std::mt19937_64 rng(80);
  const oracle::Planted p = oracle::planted_system(10, 4, rng, 0.5, 1);
  const SaddleSystem copy = p.sys;
  const SpectralReport r1 = spectral_report(p.sys), r2 = spectral_report(p.sys);
  EXPECT_EQ(r1.alpha, r2.alpha);
  EXPECT_EQ(r1.kappa3, r2.kappa3);
  EXPECT_EQ(r1.notes, r2.notes);
  EXPECT_EQ(copy.A.values(), p.sys.A.values());
  EXPECT_EQ(copy.f, p.sys.f);
}

TEST(SpectralReport, StokesHasUnitAlpha) {
  OseenSpec spec;
  spec.grid_n = 8;
  spec.wind = WindSpec::zero();
  const SpectralReport r = spectral_report(generate_oseen(spec));
  EXPECT_NEAR(*r.alpha, 1.0, 1e-10);
  EXPECT_NEAR(*r.kappa1, *r.kappa2, 1e-8 * *r.kappa1);
}
