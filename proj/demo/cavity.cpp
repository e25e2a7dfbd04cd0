// Solves one Oseen problem with the adaptive inexact Uzawa iteration and
// prints the convergence summary and a few spectral constants.
#include <iomanip>
#include <iostream>

#include "uzawa/uzawa.hpp"

int main(int argc, char** argv) {
  using namespace uzawa;
  OseenSpec spec;
  spec.grid_n = argc > 1 ? static_cast<std::size_t>(std::stoul(argv[1])) : 16;
  spec.nu = argc > 2 ? std::stod(argv[2]) : 1.0;
  spec.pressure_fix = OseenSpec::PressureFix::project_constants;
  const SaddleSystem sys = generate_oseen(spec);
  std::cout << "Oseen cavity, N = " << spec.grid_n << ", nu = " << spec.nu << ": n = " << sys.n()
            << ", m = " << sys.m() << "\n";

  SolverConfig cfg = default_config(Algorithm::inexact_uzawa_3_1);
  cfg.a_precond = PreconditionerSpec::ic(1e-4);
  cfg.max_iter = 5000;
  const SolveResult r = solve(sys, cfg);
  std::cout << "adaptive Uzawa + " << cfg.a_precond.label() << ": " << to_string(r.trace.status) << " after "
            << r.trace.iterations() << " iterations, relative residual " << std::setprecision(3)
            << r.trace.final_relative_residual() << "\n";

  ReportInputs in;
  in.a_precond = cfg.a_precond;
  in.omega = cfg.omega;
  in.delta = cfg.delta;
  const SpectralReport rep = spectral_report(sys, in);
  auto show = [](const char* name, const std::optional<double>& v) {
    std::cout << "  " << std::setw(9) << std::left << name << (v ? std::to_string(*v) : std::string("n/a")) << "\n";
  };
  show("alpha", rep.alpha);
  show("kappa0", rep.kappa0);
  show("kappa3", rep.kappa3);
  show("c0", rep.c0);
  show("omega_max", rep.omega_max);

  const auto [u, v] = center_velocity(MacGrid{spec.grid_n}, r.x);
  std::cout << "velocity at the cavity center: (" << u << ", " << v << ")\n";
  return r.trace.status == SolveStatus::converged ? 0 : 1;
}
