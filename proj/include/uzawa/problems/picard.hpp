#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "uzawa/error.hpp"
#include "uzawa/problems/oseen.hpp"
#include "uzawa/solvers/config.hpp"
#include "uzawa/solvers/uzawa.hpp"

namespace uzawa {

struct PicardStep {
  std::size_t inner_iterations = 0;
  SolveStatus inner_status = SolveStatus::max_iter;
  double inner_relative_residual = 0.0;
  double update_ratio = 0.0;  ///< ||vel_k - vel_{k-1}|| / ||vel_k||
  double wall_seconds = 0.0;
};

struct PicardResult {
  Vector velocity;  ///< MAC velocity vector (u block, then v block)
  Vector pressure;  ///< solver pressure vector (pinned DOF removed if applicable)
  std::vector<PicardStep> steps;
  bool converged = false;

  std::size_t picard_iterations() const { return steps.size(); }

  double mean_inner_iterations() const {
    if (steps.empty()) return 0.0;
    double s = 0.0;
    for (const auto& st : steps) s += static_cast<double>(st.inner_iterations);
    return s / static_cast<double>(steps.size());
  }
};

/// Picard iteration for steady Navier-Stokes: each step solves the Oseen
/// problem whose wind is the previous velocity (zero at the start, i.e. a
/// Stokes solve), warm-started from the previous iterate. Stops once the
/// relative velocity update is at most outer_tol.
inline PicardResult picard_navier_stokes(OseenSpec spec, const SolverConfig& inner_cfg,
                                         double outer_tol, std::size_t max_picard) {
  if (!(outer_tol > 0.0)) throw ConfigError("picard: outer_tol must be positive");
  if (max_picard == 0) throw ConfigError("picard: max_picard must be at least 1");
  const MacGrid grid{spec.grid_n};
  spec.wind = WindSpec::zero();
  spec.validate();
  PicardResult out;
  out.velocity.assign(grid.num_velocity(), 0.0);
  for (std::size_t k = 1; k <= max_picard; ++k) {
    const SaddleSystem sys = generate_oseen(spec);
    if (out.pressure.size() != sys.m()) out.pressure.assign(sys.m(), 0.0);
    SolveResult r;
    try {
      r = solve(sys, inner_cfg, out.velocity, out.pressure);
    } catch (const Error& e) {
      throw Error("picard iteration " + std::to_string(k) + ": " + e.what());
    }
    if (r.trace.status == SolveStatus::breakdown)
      throw BreakdownError("picard iteration " + std::to_string(k) + ": " + r.trace.message);
    PicardStep step;
    step.inner_iterations = r.trace.iterations();
    step.inner_status = r.trace.status;
    step.inner_relative_residual = r.trace.final_relative_residual();
    step.wall_seconds = r.trace.total_wall_seconds();
    const double change = norm2(subtract(r.x, out.velocity));
    const double size = norm2(r.x);
    step.update_ratio = size > 0.0 ? change / size : change;
    out.velocity = std::move(r.x);
    out.pressure = std::move(r.y);
    out.steps.push_back(step);
    if (step.update_ratio <= outer_tol) {
      out.converged = true;
      break;
    }
    spec.wind = WindSpec::discrete(out.velocity);
  }
  return out;
}

}  // namespace uzawa
