#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/QR>

#include "uzawa/diagnostics/spectral.hpp"
#include "uzawa/error.hpp"
#include "uzawa/linalg/csr_matrix.hpp"
#include "uzawa/solvers/saddle_system.hpp"

namespace uzawa {

struct SyntheticSpec {
  std::size_t n = 20;
  std::size_t m = 8;
  double target_alpha = 1.5;
  /// Zero, or target_alpha = 1, gives a symmetric A (alpha = 1).
  double skew_strength = 1.0;
  std::size_t d_rank = 0;
  std::uint64_t seed = 0;
  /// Ratio of largest to smallest eigenvalue of A_s.
  double spectrum_condition = 10.0;

  void validate() const {
    if (n == 0 || m == 0) throw ConfigError("synthetic: n and m must be positive");
    if (m > n) throw ConfigError("synthetic: m must not exceed n");
    if (d_rank > m) throw ConfigError("synthetic: d_rank must not exceed m");
    if (!(target_alpha >= 1.0)) throw ConfigError("synthetic: target_alpha must be at least 1");
    if (!(skew_strength >= 0.0)) throw ConfigError("synthetic: skew_strength must be nonnegative");
    if (!(spectrum_condition >= 1.0)) throw ConfigError("synthetic: spectrum_condition must be >= 1");
  }
};

/// A generated system together with its planted exact solution.
struct SyntheticProblem {
  SaddleSystem system;
  Vector x_star;
  Vector y_star;
  double alpha = 1.0;  ///< measured compute_alpha(A)
};

namespace detail {

inline CsrMatrix dense_to_csr(const Eigen::MatrixXd& M) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(M.size()));
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      if (M(i, j) != 0.0)
        t.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), M(i, j)});
  return CsrMatrix::from_triplets(static_cast<std::size_t>(M.rows()),
                                  static_cast<std::size_t>(M.cols()), std::move(t));
}

}  // namespace detail

/// A = Q diag(lambda) Q^T + s K with K skew, s bisected until alpha(A) is within
/// 10% of target_alpha; B dense Gaussian; D = L^T L of rank d_rank; (f, g) from
/// a planted (x*, y*).
inline SyntheticProblem generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto m = static_cast<Eigen::Index>(spec.m);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  auto gaussian = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd M(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) M(i, j) = normal(rng);
    return M;
  };

  const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(n, n)).householderQ();
  Eigen::VectorXd lambda(n);
  for (Eigen::Index i = 0; i < n; ++i)
    lambda(i) = n > 1 ? std::pow(spec.spectrum_condition, static_cast<double>(i) / static_cast<double>(n - 1))
                      : 1.0;
  Eigen::MatrixXd As = Q * lambda.asDiagonal() * Q.transpose();
  As = 0.5 * (As + As.transpose()).eval();
  const Eigen::MatrixXd R = gaussian(n, n);
  const Eigen::MatrixXd K = spec.skew_strength * (R - R.transpose());

  SyntheticProblem out;
  Eigen::MatrixXd A = As;
  if (spec.skew_strength > 0.0 && spec.target_alpha > 1.0) {
    auto alpha_at = [&](double s) { return compute_alpha(detail::dense_to_csr(As + s * K)); };
    const double lo_ok = 0.9 * spec.target_alpha, hi_ok = 1.1 * spec.target_alpha;
    double lo = 0.0, hi = 1.0;
    int steps = 0;
    while (alpha_at(hi) < spec.target_alpha && steps < 100) {
      lo = hi;
      hi *= 2.0;
      ++steps;
    }
    double s = hi;
    double a = alpha_at(s);
    for (; steps < 100 && !(a >= lo_ok && a <= hi_ok); ++steps) {
      s = 0.5 * (lo + hi);
      a = alpha_at(s);
      (a < spec.target_alpha ? lo : hi) = s;
    }
    if (!(a >= lo_ok && a <= hi_ok))
      throw Error("generate_synthetic: could not reach target_alpha in 100 bisection steps");
    A = As + s * K;
  }

  const Eigen::MatrixXd B = gaussian(n, m);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(m, m);
  if (spec.d_rank > 0) {
    const Eigen::MatrixXd L = gaussian(static_cast<Eigen::Index>(spec.d_rank), m);
    D = L.transpose() * L;
    D = 0.5 * (D + D.transpose()).eval();
  }
  const Eigen::VectorXd xs = gaussian(n, 1);
  const Eigen::VectorXd ys = gaussian(m, 1);
  const Eigen::VectorXd f = A * xs + B * ys;
  const Eigen::VectorXd g = B.transpose() * xs - D * ys;

  out.system.A = detail::dense_to_csr(A);
  out.system.B = detail::dense_to_csr(B);
  out.system.D = spec.d_rank > 0 ? detail::dense_to_csr(D) : CsrMatrix::zero(spec.m, spec.m);
  out.system.f.assign(f.data(), f.data() + n);
  out.system.g.assign(g.data(), g.data() + m);
  out.x_star.assign(xs.data(), xs.data() + n);
  out.y_star.assign(ys.data(), ys.data() + m);
  out.alpha = compute_alpha(out.system.A);
  return out;
}

}  // namespace uzawa
