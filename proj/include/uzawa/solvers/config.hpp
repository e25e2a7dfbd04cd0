#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include "uzawa/error.hpp"
#include "uzawa/operators/preconditioners.hpp"

namespace uzawa {

enum class Algorithm { exact_uzawa_2_1, inexact_uzawa_3_1, bpv_1_2, hu_zou_1_1, gmres };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::exact_uzawa_2_1: return "exact_uzawa_2_1";
    case Algorithm::inexact_uzawa_3_1: return "inexact_uzawa_3_1";
    case Algorithm::bpv_1_2: return "bpv_1_2";
    case Algorithm::hu_zou_1_1: return "hu_zou_1_1";
    case Algorithm::gmres: return "gmres";
  }
  return "?";
}

inline Algorithm algorithm_from_string(const std::string& s) {
  for (Algorithm a : {Algorithm::exact_uzawa_2_1, Algorithm::inexact_uzawa_3_1, Algorithm::bpv_1_2,
                      Algorithm::hu_zou_1_1, Algorithm::gmres})
    if (s == to_string(a)) return a;
  throw ConfigError("unknown algorithm '" + s + "'");
}

struct TauStrategy {
  enum class Kind { adaptive_H, adaptive_Ss, adaptive_M, fixed };

  Kind kind = Kind::adaptive_H;
  double value = 1.0;  ///< used by `fixed` only

  static TauStrategy adaptive_H() { return {Kind::adaptive_H}; }
  static TauStrategy adaptive_Ss() { return {Kind::adaptive_Ss}; }
  static TauStrategy adaptive_M() { return {Kind::adaptive_M}; }
  static TauStrategy fixed(double tau) { return {Kind::fixed, tau}; }
};

inline const char* to_string(TauStrategy::Kind k) {
  switch (k) {
    case TauStrategy::Kind::adaptive_H: return "adaptive_H";
    case TauStrategy::Kind::adaptive_Ss: return "adaptive_Ss";
    case TauStrategy::Kind::adaptive_M: return "adaptive_M";
    case TauStrategy::Kind::fixed: return "fixed";
  }
  return "?";
}

inline TauStrategy::Kind tau_kind_from_string(const std::string& s) {
  for (auto k : {TauStrategy::Kind::adaptive_H, TauStrategy::Kind::adaptive_Ss,
                 TauStrategy::Kind::adaptive_M, TauStrategy::Kind::fixed})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown tau strategy '" + s + "'");
}

struct SolverConfig {
  Algorithm algorithm = Algorithm::exact_uzawa_2_1;
  double omega = 0.3;
  double delta = 0.3;
  /// Relaxation for Algorithm 2.1 and the Hu-Zou variant; empty means the
  /// midpoint of the convergence window (computed densely when possible).
  std::optional<double> theta;
  TauStrategy tau_strategy = TauStrategy::adaptive_H();
  PreconditionerSpec schur_precond = PreconditionerSpec::scaled_identity();
  PreconditionerSpec a_precond = PreconditionerSpec::exact();
  double tol = 1e-6;
  std::size_t max_iter = 1000;
  std::size_t gmres_restart = 50;
  /// Largest dimension for which the default theta is computed from spectra.
  std::size_t dense_cap = kDefaultDenseCap;
  /// When false, wall_ns is written as 0 so traces are bit-reproducible.
  bool record_timing = true;

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(omega, "omega");
    positive(delta, "delta");
    positive(tol, "tol");
    if (theta) positive(*theta, "theta");
    if (tau_strategy.kind == TauStrategy::Kind::fixed) positive(tau_strategy.value, "fixed tau");
    schur_precond.validate();
    a_precond.validate();
    if (algorithm == Algorithm::gmres && gmres_restart == 0)
      throw ConfigError("gmres_restart must be at least 1");
    using K = TauStrategy::Kind;
    const K k = tau_strategy.kind;
    switch (algorithm) {
      case Algorithm::exact_uzawa_2_1:
        if (k == K::adaptive_M) throw ConfigError("exact_uzawa_2_1 does not use adaptive_M");
        break;
      case Algorithm::inexact_uzawa_3_1:
      case Algorithm::hu_zou_1_1:
        if (k == K::adaptive_H || k == K::adaptive_Ss)
          throw ConfigError(std::string(to_string(algorithm)) + " uses adaptive_M or fixed tau");
        break;
      case Algorithm::bpv_1_2:
        if (k != K::fixed) throw ConfigError("bpv_1_2 requires a fixed tau");
        break;
      case Algorithm::gmres: break;
    }
  }
};

/// Defaults per algorithm: the tau strategy each one is defined with.
inline SolverConfig default_config(Algorithm a) {
  SolverConfig c;
  c.algorithm = a;
  switch (a) {
    case Algorithm::exact_uzawa_2_1: c.tau_strategy = TauStrategy::adaptive_H(); break;
    case Algorithm::inexact_uzawa_3_1:
    case Algorithm::hu_zou_1_1: c.tau_strategy = TauStrategy::adaptive_M(); break;
    case Algorithm::bpv_1_2:
      c.tau_strategy = TauStrategy::fixed(0.01);
      c.delta = 0.1;
      break;
    case Algorithm::gmres: break;
  }
  return c;
}

}  // namespace uzawa
