#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <vector>

#include "uzawa/error.hpp"
#include "uzawa/linalg/csr_matrix.hpp"
#include "uzawa/linalg/vector.hpp"

namespace uzawa {

struct GmresOptions {
  double tol = 1e-6;          ///< on ||b - K z|| / ||b||
  std::size_t restart = 50;
  std::size_t max_iter = 1000;  ///< total Arnoldi steps
};

/// Called after every Arnoldi step with the step count and the current iterate.
/// Returning true stops the iteration.
using GmresMonitor = std::function<bool(std::size_t, const Vector&)>;

struct GmresResult {
  Vector z;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Restarted GMRES(k) without preconditioning, modified Gram-Schmidt Arnoldi
/// and Givens rotations. The monitor sees the true iterate, so callers can
/// judge convergence on whatever residual they like; otherwise the built-in
/// test uses the recursively updated residual estimate.
inline GmresResult gmres(const CsrMatrix& K, std::span<const double> b, Vector z0,
                         const GmresOptions& opt, const GmresMonitor& monitor = {}) {
  const std::size_t N = K.rows();
  if (!K.square() || b.size() != N || z0.size() != N) throw DimensionError("gmres: dimension mismatch");
  const std::size_t k = std::max<std::size_t>(1, opt.restart);
  const double bnorm = norm2(b);
  GmresResult res;
  res.z = std::move(z0);
  std::vector<Vector> V;
  std::vector<std::vector<double>> Hc(k + 1, std::vector<double>(k, 0.0));
  std::vector<double> cs(k), sn(k), s(k + 1);

  auto current_iterate = [&](std::size_t j) {
    // Solve the j x j upper-triangular system and add V_j y.
    std::vector<double> y(j);
    for (std::size_t i = j; i-- > 0;) {
      double acc = s[i];
      for (std::size_t l = i + 1; l < j; ++l) acc -= Hc[i][l] * y[l];
      y[i] = acc / Hc[i][i];
    }
    Vector z = res.z;
    for (std::size_t i = 0; i < j; ++i) axpy(y[i], V[i], z);
    return z;
  };

  while (res.iterations < opt.max_iter) {
    Vector r = spmv(K, res.z);
    for (std::size_t i = 0; i < N; ++i) r[i] = b[i] - r[i];
    const double beta = norm2(r);
    if (beta <= opt.tol * bnorm || beta == 0.0) {
      res.converged = true;
      return res;
    }
    V.assign(1, scaled(1.0 / beta, r));
    std::fill(s.begin(), s.end(), 0.0);
    s[0] = beta;
    std::size_t j = 0;
    bool stop = false;
    while (j < k && res.iterations < opt.max_iter) {
      Vector w = spmv(K, V[j]);
      for (std::size_t i = 0; i <= j; ++i) {
        Hc[i][j] = dot(w, V[i]);
        axpy(-Hc[i][j], V[i], w);
      }
      const double hnext = norm2(w);
      for (std::size_t i = 0; i < j; ++i) {
        const double t = cs[i] * Hc[i][j] + sn[i] * Hc[i + 1][j];
        Hc[i + 1][j] = -sn[i] * Hc[i][j] + cs[i] * Hc[i + 1][j];
        Hc[i][j] = t;
      }
      const double denom = std::hypot(Hc[j][j], hnext);
      if (denom == 0.0) throw BreakdownError("gmres: zero Hessenberg column");
      cs[j] = Hc[j][j] / denom;
      sn[j] = hnext / denom;
      Hc[j][j] = denom;
      s[j + 1] = -sn[j] * s[j];
      s[j] = cs[j] * s[j];
      ++j;
      ++res.iterations;
      const bool happy = hnext <= 1e-14 * denom;
      if (monitor) {
        if (monitor(res.iterations, current_iterate(j))) {
          stop = true;
          res.converged = true;
          break;
        }
      } else if (std::abs(s[j]) <= opt.tol * bnorm) {
        stop = true;
        res.converged = true;
        break;
      }
      if (happy) break;
      V.push_back(scaled(1.0 / hnext, w));
    }
    res.z = current_iterate(j);
    if (stop) return res;
  }
  return res;
}

}  // namespace uzawa
