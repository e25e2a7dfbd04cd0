#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "uzawa/diagnostics/spectral.hpp"
#include "uzawa/error.hpp"
#include "uzawa/operators/apply_operator.hpp"
#include "uzawa/operators/preconditioners.hpp"
#include "uzawa/operators/schur.hpp"
#include "uzawa/solvers/config.hpp"
#include "uzawa/solvers/gmres.hpp"
#include "uzawa/solvers/saddle_system.hpp"
#include "uzawa/solvers/trace.hpp"

namespace uzawa {

struct UzawaState {
  Vector x;
  Vector y;
};

/// What one step chose for its relaxation parameters.
struct StepInfo {
  double tau = 1.0;
  std::optional<double> omega;
};

namespace detail {

struct TauDirection {
  double tau = 1.0;
  Vector direction;  ///< S_hat^{-1} g
};

inline constexpr double kDenominatorFloor = 1e-300;

inline TauDirection tau_and_direction(std::span<const double> g, const ApplyOperator& schur_inv,
                                      const ApplyOperator& numerator_op) {
  TauDirection out;
  out.direction = schur_inv(g);
  if (std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) return out;
  const double num = dot(g, out.direction);
  const double den = dot(numerator_op(out.direction), out.direction);
  if (!(den > kDenominatorFloor) || !(num > 0.0))
    throw BreakdownError("operator not positive on residual direction");
  out.tau = num / den;
  return out;
}

inline void remove_mean(Vector& y) {
  if (y.empty()) return;
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  for (double& v : y) v -= mean;
}

}  // namespace detail

/// tau = <g, S^{-1} g> / <Op S^{-1} g, S^{-1} g>, or 1 for g exactly zero.
inline double compute_tau(std::span<const double> g, const ApplyOperator& schur_inv,
                          const ApplyOperator& numerator_op) {
  return detail::tau_and_direction(g, schur_inv, numerator_op).tau;
}

/// Operators for one (system, config) pair, built once; step() then advances
/// a state in place. The system must outlive the solver.
class UzawaSolver {
 public:
  UzawaSolver(const SaddleSystem& sys, SolverConfig cfg) : sys_(&sys), cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.algorithm == Algorithm::gmres)
      throw ConfigError("UzawaSolver: gmres is not an Uzawa step; use solve()");
    schur_inv_ = build_schur_preconditioner(cfg_.schur_precond, sys);
    switch (cfg_.algorithm) {
      case Algorithm::exact_uzawa_2_1: build_exact(); break;
      case Algorithm::inexact_uzawa_3_1: build_inexact(); break;
      case Algorithm::bpv_1_2: build_bpv(); break;
      case Algorithm::hu_zou_1_1: build_hu_zou(); break;
      case Algorithm::gmres: break;
    }
  }

  const SolverConfig& config() const noexcept { return cfg_; }
  const SaddleSystem& system() const noexcept { return *sys_; }
  /// Relaxation applied to the y-update of Algorithm 2.1 and the Hu-Zou variant.
  double theta() const noexcept { return theta_; }
  const std::vector<std::string>& notes() const noexcept { return notes_; }
  const std::map<std::string, std::string>& metadata() const noexcept { return metadata_; }

  StepInfo step(UzawaState& s) const {
    if (s.x.size() != sys_->n() || s.y.size() != sys_->m())
      throw DimensionError("UzawaSolver::step: state has wrong dimensions");
    StepInfo info;
    switch (cfg_.algorithm) {
      case Algorithm::exact_uzawa_2_1: info = step_exact(s); break;
      case Algorithm::inexact_uzawa_3_1: info = step_inexact(s); break;
      case Algorithm::bpv_1_2: info = step_bpv(s); break;
      case Algorithm::hu_zou_1_1: info = step_hu_zou(s); break;
      case Algorithm::gmres: break;
    }
    if (sys_->constant_pressure_nullspace) detail::remove_mean(s.y);
    return info;
  }

 private:
  void build_exact() {
    using K = TauStrategy::Kind;
    metadata_["a_solve"] = "exact";
    auto lu = std::make_shared<const SparseLU>(sys_->A);
    a_inv_ = inverse_operator(lu);
    const K kind = cfg_.tau_strategy.kind;
    if (kind == K::adaptive_H)
      tau_op_ = schur_operator(*sys_, build_exact_solver(symmetric_part(sys_->A)), SchurKind::H);
    else if (kind == K::adaptive_Ss)
      tau_op_ = schur_operator(*sys_, symmetrized_inverse_operator(lu), SchurKind::Ss);
    resolve_theta();
  }

  void build_inexact() {
    a0_inv_ = build_a0();
    if (cfg_.tau_strategy.kind == TauStrategy::Kind::adaptive_M)
      tau_op_ = schur_operator(*sys_, *a0_inv_, SchurKind::M);
  }

  void build_bpv() {
    a0_inv_ = build_a0();
    if (sys_->D.nnz() > 0) {
      metadata_["bpv_d_extension"] = "residual includes -D y";
      notes_.push_back("BPV generalized to D != 0: the y-update uses B^T x - D y - g");
    }
  }

  void build_hu_zou() {
    metadata_["convergence"] = "unproven";
    if (cfg_.a_precond.kind == PreconditionerSpec::Kind::ic_droptol) {
      a_hat_inv_ = build_a0();
      notes_.push_back("incomplete Cholesky needs symmetry; A_hat is built from A_s");
    } else {
      a_hat_inv_ = build_preconditioner(cfg_.a_precond, sys_->A);
    }
    a0_inv_ = build_a0();
    if (cfg_.tau_strategy.kind == TauStrategy::Kind::adaptive_M)
      tau_op_ = schur_operator(*sys_, *a0_inv_, SchurKind::M);
    if (cfg_.theta) {
      theta_ = *cfg_.theta;
    } else {
      theta_ = cfg_.delta;
      notes_.push_back("theta not given; using delta for the y-relaxation");
    }
    metadata_["theta"] = std::to_string(theta_);
  }

  ApplyOperator build_a0() {
    const CsrMatrix As = symmetric_part(sys_->A);
    if (cfg_.a_precond.kind == PreconditionerSpec::Kind::ic_droptol) {
      IncompleteFactorBuild b = build_incomplete_cholesky_detailed(As, cfg_.a_precond.droptol);
      if (b.retries > 0) {
        std::ostringstream msg;
        msg << "incomplete Cholesky broke down; diagonal shift " << b.shift << " after "
            << b.retries << " retries";
        notes_.push_back(msg.str());
        metadata_["ic_shift"] = std::to_string(b.shift);
      }
      return b.op;
    }
    if (cfg_.a_precond.kind == PreconditionerSpec::Kind::ilu_droptol) {
      IncompleteFactorBuild b = build_ilu_detailed(As, cfg_.a_precond.droptol);
      if (b.retries > 0) {
        std::ostringstream msg;
        msg << "ILU broke down; diagonal shift " << b.shift << " after " << b.retries << " retries";
        notes_.push_back(msg.str());
        metadata_["ilu_shift"] = std::to_string(b.shift);
      }
      return b.op;
    }
    return build_preconditioner(cfg_.a_precond, As);
  }

  /// theta defaults to half of the admissible window when spectra are computable.
  void resolve_theta() {
    if (cfg_.theta) {
      theta_ = *cfg_.theta;
      metadata_["theta"] = std::to_string(theta_);
      return;
    }
    if (cfg_.tau_strategy.kind == TauStrategy::Kind::fixed) {
      theta_ = 1.0;
      notes_.push_back("theta not given with fixed tau; using 1");
      metadata_["theta"] = std::to_string(theta_);
      return;
    }
    try {
      const double alpha = compute_alpha(sys_->A, cfg_.dense_cap);
      const double kappa = compute_kappa(*schur_inv_, *tau_op_, sys_->m(), cfg_.dense_cap, false,
                                         sys_->constant_pressure_nullspace);
      const Theorem21Window w = cfg_.tau_strategy.kind == TauStrategy::Kind::adaptive_Ss
                                    ? theorem21_window_ss(alpha, beta_from_kappa(kappa))
                                    : theorem21_window(alpha, beta_from_kappa(kappa));
      theta_ = 0.5 * w.theta_max;
      metadata_["theta_source"] = "window midpoint";
    } catch (const Error& e) {
      theta_ = 0.5;
      notes_.push_back(std::string("warning: theta window unavailable (") + e.what() +
                       "); using 0.5");
      metadata_["theta_source"] = "fallback";
    }
    metadata_["theta"] = std::to_string(theta_);
  }

  double tau_for(const Vector& g, Vector& direction) const {
    if (cfg_.tau_strategy.kind == TauStrategy::Kind::fixed) {
      direction = (*schur_inv_)(g);
      return cfg_.tau_strategy.value;
    }
    detail::TauDirection td = detail::tau_and_direction(g, *schur_inv_, *tau_op_);
    direction = std::move(td.direction);
    return td.tau;
  }

  StepInfo step_exact(UzawaState& s) const {
    const Vector r = residual_x(*sys_, s.x, s.y);
    axpy(1.0, (*a_inv_)(r), s.x);
    return update_y(s, theta_);
  }

  StepInfo step_inexact(UzawaState& s) const {
    const Vector r = residual_x(*sys_, s.x, s.y);
    axpy(cfg_.omega, (*a0_inv_)(r), s.x);
    return update_y(s, cfg_.delta);
  }

  StepInfo step_bpv(UzawaState& s) const {
    const Vector r = residual_x(*sys_, s.x, s.y);
    axpy(cfg_.delta, (*a0_inv_)(r), s.x);
    const Vector g = residual_y(*sys_, s.x, s.y);
    axpy(cfg_.tau_strategy.value, (*schur_inv_)(g), s.y);
    return {cfg_.tau_strategy.value, std::nullopt};
  }

  StepInfo step_hu_zou(UzawaState& s) const {
    const Vector fi = residual_x(*sys_, s.x, s.y);
    const Vector ri = (*a_hat_inv_)(fi);
    double omega = 1.0;
    if (!std::all_of(fi.begin(), fi.end(), [](double v) { return v == 0.0; })) {
      const double den = dot(spmv(sys_->A, ri), ri);
      if (!(den > detail::kDenominatorFloor))
        throw BreakdownError("hu_zou: <A r, r> is not positive");
      omega = dot(fi, ri) / den;
    }
    axpy(omega, ri, s.x);
    StepInfo info = update_y(s, theta_);
    info.omega = omega;
    return info;
  }

  /// y += relax * tau * S_hat^{-1} g with g = B^T x - D y - g evaluated at the new x.
  StepInfo update_y(UzawaState& s, double relax) const {
    const Vector g = residual_y(*sys_, s.x, s.y);
    Vector direction;
    const double tau = tau_for(g, direction);
    axpy(relax * tau, direction, s.y);
    return {tau, std::nullopt};
  }

  const SaddleSystem* sys_;
  SolverConfig cfg_;
  std::optional<ApplyOperator> schur_inv_, a_inv_, a0_inv_, a_hat_inv_, tau_op_;
  double theta_ = 1.0;
  std::vector<std::string> notes_;
  std::map<std::string, std::string> metadata_;
};

/// One step of Algorithm 2.1 from scratch (builds operators every call).
inline StepInfo step_exact_uzawa(const SaddleSystem& sys, UzawaState& s, SolverConfig cfg) {
  cfg.algorithm = Algorithm::exact_uzawa_2_1;
  return UzawaSolver(sys, std::move(cfg)).step(s);
}

inline StepInfo step_inexact_uzawa(const SaddleSystem& sys, UzawaState& s, SolverConfig cfg) {
  cfg.algorithm = Algorithm::inexact_uzawa_3_1;
  return UzawaSolver(sys, std::move(cfg)).step(s);
}

inline StepInfo step_bpv(const SaddleSystem& sys, UzawaState& s, SolverConfig cfg) {
  cfg.algorithm = Algorithm::bpv_1_2;
  return UzawaSolver(sys, std::move(cfg)).step(s);
}

inline StepInfo step_hu_zou(const SaddleSystem& sys, UzawaState& s, SolverConfig cfg) {
  cfg.algorithm = Algorithm::hu_zou_1_1;
  return UzawaSolver(sys, std::move(cfg)).step(s);
}

struct SolveResult {
  Vector x;
  Vector y;
  IterationTrace trace;
};

namespace detail {

inline IterationRecord make_record(std::size_t iter, const Residuals& r) {
  IterationRecord rec;
  rec.iter = iter;
  rec.res_x = r.x;
  rec.res_y = r.y;
  rec.res_combined = r.combined();
  return rec;
}

inline std::int64_t elapsed_ns(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0)
      .count();
}

inline SolveResult solve_gmres(const SaddleSystem& sys, const SolverConfig& cfg, Vector x0, Vector y0) {
  const std::size_t n = sys.n(), m = sys.m();
  SolveResult out;
  out.trace.tol = cfg.tol;
  out.trace.rhs_norm = rhs_norm(sys);
  out.trace.metadata["algorithm"] = "gmres";
  out.trace.metadata["restart"] = std::to_string(cfg.gmres_restart);
  const CsrMatrix K = assemble_block_matrix(sys);
  Vector b(n + m), z(n + m);
  std::copy(sys.f.begin(), sys.f.end(), b.begin());
  std::copy(sys.g.begin(), sys.g.end(), b.begin() + static_cast<std::ptrdiff_t>(n));
  std::copy(x0.begin(), x0.end(), z.begin());
  std::copy(y0.begin(), y0.end(), z.begin() + static_cast<std::ptrdiff_t>(n));
  const double threshold = cfg.tol * out.trace.rhs_norm;
  auto split = [&](const Vector& zz, Vector& x, Vector& y) {
    x.assign(zz.begin(), zz.begin() + static_cast<std::ptrdiff_t>(n));
    y.assign(zz.begin() + static_cast<std::ptrdiff_t>(n), zz.end());
  };
  split(z, out.x, out.y);
  out.trace.records.push_back(make_record(0, residuals(sys, out.x, out.y)));
  if (out.trace.records.back().res_combined <= threshold) {
    out.trace.status = SolveStatus::converged;
    return out;
  }
  auto t0 = std::chrono::steady_clock::now();
  GmresOptions opt{cfg.tol, cfg.gmres_restart, cfg.max_iter};
  bool converged = false;
  auto monitor = [&](std::size_t it, const Vector& zz) {
    Vector x, y;
    split(zz, x, y);
    IterationRecord rec = make_record(it, residuals(sys, x, y));
    rec.wall_ns = cfg.record_timing ? elapsed_ns(t0) : 0;
    t0 = std::chrono::steady_clock::now();
    out.trace.records.push_back(rec);
    converged = rec.res_combined <= threshold;
    return converged;
  };
  GmresResult g = gmres(K, b, std::move(z), opt, monitor);
  split(g.z, out.x, out.y);
  out.trace.status = converged ? SolveStatus::converged : SolveStatus::max_iter;
  return out;
}

}  // namespace detail

/// Iterates the configured algorithm until the combined residual satisfies
/// sqrt(rx^2 + ry^2) <= tol * sqrt(||f||^2 + ||g||^2) or max_iter steps.
/// A breakdown ends the run with status `breakdown`; other step errors are
/// rethrown with the iteration index attached.
inline SolveResult solve(const SaddleSystem& sys, const SolverConfig& cfg, Vector x0 = {},
                         Vector y0 = {}) {
  cfg.validate();
  if (x0.empty()) x0.assign(sys.n(), 0.0);
  if (y0.empty()) y0.assign(sys.m(), 0.0);
  if (x0.size() != sys.n() || y0.size() != sys.m())
    throw DimensionError("solve: initial guess has wrong dimensions");
  if (cfg.algorithm == Algorithm::gmres) return detail::solve_gmres(sys, cfg, std::move(x0), std::move(y0));

  const UzawaSolver solver(sys, cfg);
  SolveResult out;
  out.trace.tol = cfg.tol;
  out.trace.rhs_norm = rhs_norm(sys);
  out.trace.metadata = solver.metadata();
  out.trace.metadata["algorithm"] = to_string(cfg.algorithm);
  out.trace.metadata["tau_strategy"] = to_string(cfg.tau_strategy.kind);
  out.trace.notes = solver.notes();
  UzawaState state{std::move(x0), std::move(y0)};
  const double threshold = cfg.tol * out.trace.rhs_norm;
  out.trace.records.push_back(detail::make_record(0, residuals(sys, state.x, state.y)));
  for (std::size_t k = 0;; ++k) {
    const double current = out.trace.records.back().res_combined;
    if (!std::isfinite(current)) {
      out.trace.status = SolveStatus::breakdown;
      out.trace.message = "iteration " + std::to_string(k) + ": non-finite residual";
      break;
    }
    if (current <= threshold) {
      out.trace.status = SolveStatus::converged;
      break;
    }
    if (k >= cfg.max_iter) {
      out.trace.status = SolveStatus::max_iter;
      break;
    }
    const auto t0 = std::chrono::steady_clock::now();
    StepInfo info;
    try {
      info = solver.step(state);
    } catch (const BreakdownError& e) {
      out.trace.status = SolveStatus::breakdown;
      out.trace.message = "iteration " + std::to_string(k + 1) + ": " + e.what();
      break;
    } catch (const Error& e) {
      throw Error("iteration " + std::to_string(k + 1) + ": " + e.what());
    }
    IterationRecord rec = detail::make_record(k + 1, residuals(sys, state.x, state.y));
    rec.tau = info.tau;
    rec.omega = info.omega;
    rec.wall_ns = cfg.record_timing ? detail::elapsed_ns(t0) : 0;
    out.trace.records.push_back(rec);
  }
  out.x = std::move(state.x);
  out.y = std::move(state.y);
  return out;
}

}  // namespace uzawa
