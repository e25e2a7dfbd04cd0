#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "uzawa/error.hpp"
#include "uzawa/linalg/csr_matrix.hpp"
#include "uzawa/linalg/dense.hpp"
#include "uzawa/linalg/sparse_factor.hpp"
#include "uzawa/operators/apply_operator.hpp"
#include "uzawa/operators/preconditioners.hpp"
#include "uzawa/operators/schur.hpp"
#include "uzawa/solvers/saddle_system.hpp"

namespace uzawa {

/// Spectral constants of a saddle system and its preconditioners. Fields stay
/// empty when they could not be computed; `notes` says why.
struct SpectralReport {
  std::optional<double> alpha;
  std::optional<double> kappa0;
  std::optional<double> kappa1, kappa2, kappa3;
  std::optional<double> beta1, beta2, beta3;
  std::optional<double> c0;
  std::optional<double> theta_max;
  std::optional<double> theta_max_ss;
  std::optional<double> omega;
  std::optional<double> delta;
  std::optional<double> omega_max;
  std::optional<double> delta_max;
  std::optional<double> delta_bound_beta3;  ///< 1 / (4 (1 + beta3))
  std::optional<double> delta_bound_error;  ///< 1 / (4 alpha^2 kappa0^2)
  std::optional<double> omega_bar;
  std::optional<double> Delta;
  std::optional<double> rho_bar;
  std::vector<std::string> notes;
};

/// (kappa - 1) / (kappa + 1).
inline double beta_from_kappa(double kappa) { return (kappa - 1.0) / (kappa + 1.0); }

/// Dense matrix of a linear action, one unit vector at a time.
inline DenseMatrix to_dense(const ApplyOperator& op, std::size_t cap = kDefaultDenseCap) {
  detail::require_within_cap(op.dim(), cap, "to_dense");
  const std::size_t n = op.dim();
  DenseMatrix M(n, n);
  Vector e(n, 0.0), col(n);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    op.apply(e, col);
    e[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) M(i, j) = col[i];
  }
  return M;
}

namespace detail {

inline double relative_asymmetry(const DenseMatrix& M) {
  double diff = 0.0;
  for (std::size_t i = 0; i < M.rows(); ++i)
    for (std::size_t j = i + 1; j < M.cols(); ++j)
      diff = std::max(diff, std::abs(M(i, j) - M(j, i)));
  return diff / std::max(M.max_abs(), 1e-300);
}

inline Eigen::MatrixXd symmetric_eigen_copy(const DenseMatrix& M) {
  Eigen::MatrixXd E = as_eigen(M);
  return 0.5 * (E + E.transpose());
}

/// Orthonormal basis (m x (m-1)) of the complement of the constant vector.
inline Eigen::MatrixXd constants_complement(Eigen::Index m) {
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
  const Eigen::MatrixXd Qf = Eigen::HouseholderQR<Eigen::MatrixXd>(ones).householderQ();
  return Qf.rightCols(m - 1);
}

/// Ascending eigenvalues of P Q for SPD P and symmetric Q, via L^T Q L with
/// P = L L^T. With `deflate`, both are first restricted to the complement of
/// the constants.
inline Eigen::VectorXd product_eigenvalues(const DenseMatrix& P, const DenseMatrix& Q,
                                           const char* what, bool deflate = false) {
  Eigen::MatrixXd Pe = symmetric_eigen_copy(P), Qe = symmetric_eigen_copy(Q);
  if (deflate) {
    const Eigen::MatrixXd Z = constants_complement(Pe.rows());
    Pe = Z.transpose() * Pe * Z;
    Qe = Z.transpose() * Qe * Z;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(Pe);
  if (llt.info() != Eigen::Success)
    throw Error(std::string(what) + ": preconditioner is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  Eigen::MatrixXd C = L.transpose() * Qe * L;
  C = 0.5 * (C + C.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(std::string(what) + ": eigensolver failed");
  return es.eigenvalues();
}

inline void require_operator_symmetric(const DenseMatrix& M, bool allow_symmetrize,
                                       const std::string& what) {
  if (!allow_symmetrize && relative_asymmetry(M) > 1e-8)
    throw Error(what + ": operator is not symmetric");
}

}  // namespace detail

struct AlphaResult {
  double alpha = 0.0;
  Vector x;  ///< with y, attains <A x, y> = alpha ||x||_{A_s} ||y||_{A_s}
  Vector y;
};

/// Largest singular value of L^{-1} A L^{-T} where A_s = L L^T, with its
/// maximizing pair mapped back to the original variables.
inline AlphaResult compute_alpha_detailed(const CsrMatrix& A, std::size_t cap = kDefaultDenseCap) {
  if (!A.square()) throw DimensionError("compute_alpha: A not square");
  detail::require_within_cap(A.rows(), cap, "compute_alpha");
  const Eigen::MatrixXd Ad = detail::as_eigen(DenseMatrix::from_csr(A));
  const Eigen::MatrixXd As = 0.5 * (Ad + Ad.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(As);
  if (llt.info() != Eigen::Success)
    throw Error("compute_alpha: symmetric part of A is not positive definite");
  const auto L = llt.matrixL();
  Eigen::MatrixXd C = L.solve(Ad);
  C = L.solve(C.transpose().eval()).transpose().eval();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeThinU | Eigen::ComputeThinV);
  AlphaResult out;
  out.alpha = svd.singularValues()(0);
  const Eigen::VectorXd x = llt.matrixU().solve(svd.matrixV().col(0));
  const Eigen::VectorXd y = llt.matrixU().solve(svd.matrixU().col(0));
  out.x.assign(x.data(), x.data() + x.size());
  out.y.assign(y.data(), y.data() + y.size());
  return out;
}

inline double compute_alpha(const CsrMatrix& A, std::size_t cap = kDefaultDenseCap) {
  return compute_alpha_detailed(A, cap).alpha;
}

/// lambda_max / lambda_min of the pencil Op v = lambda S v, given S^{-1}.
/// `deflate_constants` restricts the pencil to mean-free vectors, for systems
/// whose pressure is only defined up to a constant.
inline double compute_kappa(const ApplyOperator& schur_inv, const ApplyOperator& op, std::size_t m,
                            std::size_t cap = kDefaultDenseCap, bool allow_symmetrize = false,
                            bool deflate_constants = false) {
  if (schur_inv.dim() != m || op.dim() != m) throw DimensionError("compute_kappa: dimension mismatch");
  detail::require_within_cap(m, cap, "compute_kappa");
  const DenseMatrix P = to_dense(schur_inv, cap);
  const DenseMatrix Q = to_dense(op, cap);
  detail::require_operator_symmetric(P, allow_symmetrize, "compute_kappa(" + schur_inv.name() + ")");
  detail::require_operator_symmetric(Q, allow_symmetrize, "compute_kappa(" + op.name() + ")");
  const Eigen::VectorXd ev = detail::product_eigenvalues(P, Q, "compute_kappa", deflate_constants);
  const double lo = ev(0), hi = ev(ev.size() - 1);
  if (!(lo > 0.0)) throw Error("compute_kappa: nonpositive eigenvalue, operator '" + op.name() + "' is not SPD");
  return hi / lo;
}

/// Extreme eigenvalues of S^{-1} Op (ascending pair).
inline std::pair<double, double> pencil_extremes(const ApplyOperator& schur_inv,
                                                 const ApplyOperator& op,
                                                 std::size_t cap = kDefaultDenseCap,
                                                 bool deflate_constants = false) {
  detail::require_within_cap(op.dim(), cap, "pencil_extremes");
  const Eigen::VectorXd ev = detail::product_eigenvalues(to_dense(schur_inv, cap), to_dense(op, cap),
                                                         "pencil_extremes", deflate_constants);
  return {ev(0), ev(ev.size() - 1)};
}

/// Ratio lambda_max / lambda_min of A_0^{-1} A_s; the constant of the spectral
/// equivalence between A_0 and A_s once A_0 is scaled so lambda_min = 1.
inline double compute_kappa0(const CsrMatrix& A, const ApplyOperator& a0_inv,
                             std::size_t cap = kDefaultDenseCap, bool allow_symmetrize = false) {
  if (a0_inv.dim() != A.rows()) throw DimensionError("compute_kappa0: dimension mismatch");
  detail::require_within_cap(A.rows(), cap, "compute_kappa0");
  const DenseMatrix P = to_dense(a0_inv, cap);
  detail::require_operator_symmetric(P, allow_symmetrize, "compute_kappa0(" + a0_inv.name() + ")");
  const Eigen::VectorXd ev =
      detail::product_eigenvalues(P, DenseMatrix::from_csr(symmetric_part(A)), "compute_kappa0");
  if (!(ev(0) > 0.0)) throw Error("compute_kappa0: A_s is not positive definite");
  return ev(ev.size() - 1) / ev(0);
}

/// Smallest eigenvalue of B^T A_s^{-1} B (on mean-free vectors when the system
/// declares a constant pressure nullspace); 0 when it falls below 1e-12 of the largest.
inline double compute_lbb_constant(const SaddleSystem& sys, std::size_t cap = kDefaultDenseCap) {
  detail::require_within_cap(sys.m(), cap, "compute_lbb_constant");
  detail::require_within_cap(sys.n(), cap, "compute_lbb_constant");
  const std::size_t n = sys.n(), m = sys.m();
  const SparseCholesky chol(symmetric_part(sys.A));
  const DenseMatrix Bd = DenseMatrix::from_csr(sys.B);
  DenseMatrix S(m, m);
  for (std::size_t j = 0; j < m; ++j) {
    const Vector z = chol.solve(Bd.column(j));
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += Bd(k, i) * z[k];
      S(i, j) = s;
    }
  }
  symmetrize(S);
  Vector ev;
  if (sys.constant_pressure_nullspace) {
    const Eigen::MatrixXd Z = detail::constants_complement(static_cast<Eigen::Index>(m));
    const Eigen::MatrixXd R = Z.transpose() * detail::as_eigen(S) * Z;
    ev = dense_eig_sym(detail::from_eigen(0.5 * (R + R.transpose())), cap).values;
  } else {
    ev = dense_eig_sym(S, cap).values;
  }
  const double hi = std::max(std::abs(ev.back()), std::abs(ev.front()));
  if (hi == 0.0 || ev.front() < 1e-12 * hi) return 0.0;
  return ev.front();
}

struct Theorem21Window {
  double theta_max = 0.0;
  double beta = 0.0;
  double alpha = 1.0;
  bool ss_variant = false;

  /// Squared-norm contraction factor per step for a given theta.
  double rate(double theta) const {
    return ss_variant ? 1.0 - theta * (1.0 - beta) : 1.0 - theta * (1.0 - beta) / (alpha * alpha);
  }
};

/// Window for the H-based strategy: theta < (1 - beta1) / (alpha^2 (1 + beta1)^2).
inline Theorem21Window theorem21_window(double alpha, double beta1) {
  return {(1.0 - beta1) / (alpha * alpha * (1.0 + beta1) * (1.0 + beta1)), beta1, alpha, false};
}

/// Window for the (A^{-1})_s strategy: theta < (1 - beta2) / (alpha^4 (1 + beta2)^2).
inline Theorem21Window theorem21_window_ss(double alpha, double beta2) {
  const double a2 = alpha * alpha;
  return {(1.0 - beta2) / (a2 * a2 * (1.0 + beta2) * (1.0 + beta2)), beta2, alpha, true};
}

inline Theorem21Window theorem21_window(const SpectralReport& r) {
  if (!r.alpha || !r.beta1) throw Error("theorem21_window: report lacks alpha or beta1");
  return theorem21_window(*r.alpha, *r.beta1);
}

struct Theorem31Window {
  bool defined = false;
  std::string reason;  ///< why the window is undefined
  double alpha = 1.0, kappa0 = 1.0, beta3 = 0.0, delta = 0.0;
  double omega_max_a = 0.0;  ///< 1 / (3 alpha^2 kappa0^2)
  double omega_max_b = 0.0;  ///< (1 + kappa0 (1 - delta (1 + beta3))) / ((alpha^2 kappa0 + 1) kappa0)
  double omega_max = 0.0;
  double Delta = 0.0;
  double delta_bound_beta3 = 0.0;
  double delta_bound_error = 0.0;

  double omega_bar(double omega) const {
    return 1.0 - omega + omega * omega * alpha * alpha * kappa0 * kappa0 / (1.0 - omega * kappa0);
  }

  double rho_bar(double omega) const {
    const double a = omega / 2.0 - omega * Delta;
    return (a + std::sqrt(a * a + 4.0 * (1.0 - omega / 2.0))) / 2.0;
  }

  bool contains(double omega) const { return defined && omega > 0.0 && omega < omega_max; }
};

inline Theorem31Window theorem31_window(double alpha, double kappa0, double beta3, double delta) {
  Theorem31Window w;
  w.alpha = alpha;
  w.kappa0 = kappa0;
  w.beta3 = beta3;
  w.delta = delta;
  w.delta_bound_beta3 = 1.0 / (4.0 * (1.0 + beta3));
  w.delta_bound_error = 1.0 / (4.0 * alpha * alpha * kappa0 * kappa0);
  w.Delta = delta * (1.0 - beta3) / kappa0;
  if (!(delta > 0.0 && delta < 0.5)) {
    w.reason = "delta must lie in (0, 1/2)";
    return w;
  }
  w.defined = true;
  w.omega_max_a = 1.0 / (3.0 * alpha * alpha * kappa0 * kappa0);
  w.omega_max_b = (1.0 + kappa0 * (1.0 - delta * (1.0 + beta3))) / ((alpha * alpha * kappa0 + 1.0) * kappa0);
  w.omega_max = std::min(w.omega_max_a, w.omega_max_b);
  return w;
}

inline Theorem31Window theorem31_window(const SpectralReport& r, double delta) {
  if (!r.alpha || !r.kappa0 || !r.beta3)
    throw Error("theorem31_window: report lacks alpha, kappa0 or beta3");
  return theorem31_window(*r.alpha, *r.kappa0, *r.beta3, delta);
}

/// min over random v of <v,v>^2 / (<Gv,v><G^{-1}v,v>) divided by 4 l1 l2 / (l1 + l2)^2.
inline double kantorovich_check(const DenseMatrix& G, std::size_t trials, std::uint64_t seed = 1,
                                std::size_t cap = kDefaultDenseCap) {
  detail::require_within_cap(G.rows(), cap, "kantorovich_check");
  const SymmetricEigen eig = dense_eig_sym(G, cap);
  const double l1 = eig.values.front(), l2 = eig.values.back();
  if (!(l1 > 0.0)) throw Error("kantorovich_check: matrix is not positive definite");
  const double bound = 4.0 * l1 * l2 / ((l1 + l2) * (l1 + l2));
  const DenseMatrix Ginv = dense_spd_inverse(G);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double worst = std::numeric_limits<double>::infinity();
  Vector v(G.rows());
  for (std::size_t t = 0; t < trials; ++t) {
    for (double& e : v) e = normal(rng);
    const double vv = dot(v, v);
    const double lhs = vv * vv / (dot(multiply(G, v), v) * dot(multiply(Ginv, v), v));
    worst = std::min(worst, lhs / bound);
  }
  return worst;
}

/// Which preconditioners and parameters a report is computed for.
struct ReportInputs {
  PreconditionerSpec schur_precond = PreconditionerSpec::scaled_identity();
  PreconditionerSpec a_precond = PreconditionerSpec::exact();
  std::optional<double> omega;
  std::optional<double> delta;
  std::size_t cap = kDefaultDenseCap;
};

/// Builds the full report. Each constant is computed independently so that one
/// failure (cap exceeded, nonsymmetric A_0) leaves the others intact.
inline SpectralReport spectral_report(const SaddleSystem& sys, const ReportInputs& in = {}) {
  SpectralReport r;
  r.omega = in.omega;
  r.delta = in.delta;
  auto attempt = [&](const char* what, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      r.notes.push_back(std::string(what) + ": " + e.what());
    }
  };
  const std::size_t m = sys.m();
  const bool deflate = sys.constant_pressure_nullspace;
  if (deflate) r.notes.push_back("pressure defined up to constants; Schur spectra are taken on mean-free vectors");
  const CsrMatrix As = symmetric_part(sys.A);
  std::optional<ApplyOperator> schur_inv;
  attempt("schur_precond", [&] {
    schur_inv = build_schur_preconditioner(in.schur_precond, sys);
  });
  attempt("alpha", [&] { r.alpha = compute_alpha(sys.A, in.cap); });
  attempt("c0", [&] { r.c0 = compute_lbb_constant(sys, in.cap); });
  if (schur_inv) {
    attempt("kappa1", [&] {
      const ApplyOperator H = schur_operator(sys, build_exact_solver(As), SchurKind::H);
      r.kappa1 = compute_kappa(*schur_inv, H, m, in.cap, false, deflate);
      r.beta1 = beta_from_kappa(*r.kappa1);
    });
    attempt("kappa2", [&] {
      const auto lu = std::make_shared<const SparseLU>(sys.A);
      const ApplyOperator Ss = schur_operator(sys, symmetrized_inverse_operator(lu), SchurKind::Ss);
      r.kappa2 = compute_kappa(*schur_inv, Ss, m, in.cap, false, deflate);
      r.beta2 = beta_from_kappa(*r.kappa2);
    });
  }
  std::optional<ApplyOperator> a0_inv;
  attempt("a_precond", [&] { a0_inv = build_preconditioner(in.a_precond, As); });
  if (a0_inv) {
    const bool a0_sym = a0_inv->symmetric();
    if (!a0_sym)
      r.notes.push_back("A_0 (" + a0_inv->name() +
                        ") is not symmetric; kappa0 and kappa3 use the symmetric part of its inverse");
    attempt("kappa0", [&] { r.kappa0 = compute_kappa0(sys.A, *a0_inv, in.cap, !a0_sym); });
    if (schur_inv) {
      attempt("kappa3", [&] {
        const ApplyOperator M = schur_operator(sys, *a0_inv, SchurKind::M);
        r.kappa3 = compute_kappa(*schur_inv, M, m, in.cap, !a0_sym, deflate);
        r.beta3 = beta_from_kappa(*r.kappa3);
      });
    }
  }
  if (r.alpha && r.beta1) r.theta_max = theorem21_window(*r.alpha, *r.beta1).theta_max;
  if (r.alpha && r.beta2) r.theta_max_ss = theorem21_window_ss(*r.alpha, *r.beta2).theta_max;
  if (r.alpha && r.kappa0 && r.beta3) {
    const double delta = in.delta.value_or(0.3);
    const Theorem31Window w = theorem31_window(*r.alpha, *r.kappa0, *r.beta3, delta);
    r.delta_max = 0.5;
    r.delta_bound_beta3 = w.delta_bound_beta3;
    r.delta_bound_error = w.delta_bound_error;
    r.Delta = w.Delta;
    if (w.defined) {
      r.omega_max = w.omega_max;
      if (in.omega) {
        r.omega_bar = w.omega_bar(*in.omega);
        r.rho_bar = w.rho_bar(*in.omega);
        if (!w.contains(*in.omega)) r.notes.push_back("omega lies outside the convergence window");
      }
    } else {
      r.notes.push_back("omega window undefined: " + w.reason);
    }
  }
  return r;
}

}  // namespace uzawa
