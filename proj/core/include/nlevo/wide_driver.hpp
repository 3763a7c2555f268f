#pragma once

// Epsilon ladder for the weighted space-time functional: solve each rung,
// check the energy bounds every minimizer must satisfy, and extract the
// eps -> 0 limit.

#include <cstddef>
#include <string>
#include <vector>

#include "nlevo/discretization.hpp"
#include "nlevo/optimizer.hpp"
#include "nlevo/regularized_functional.hpp"

namespace nlevo {

// T must be at least this multiple of eps so that e^{-T/eps} <= 1e-8.
inline constexpr double kHorizonFactor = 18.4;

struct WideOptions {
  SolveOptions solve;
  std::size_t K = 64;
  double T = 0.0;           // 0: kHorizonFactor * largest eps
  double tol = 0.05;        // relative slack on every energy inequality
  double limit_tol = 0.05;  // relative L^2(Omega_T) Cauchy tolerance between rungs
  double mono_tol = 1e-6;   // times lambda_disc
  double min_bound_tol = 1e-8;  // times lambda_disc
};

struct HolderReport {
  double worst_ratio = 0.0;   // max ||u_k - u_l||^2 / (lambda |t_k - t_l|)
  double worst_margin = 0.0;  // min lambda |t_k - t_l| (1 + tol) - ||u_k - u_l||^2
  std::size_t worst_k = 0, worst_l = 0;
  std::size_t pairs = 0;
  bool passed = true;
};

struct SlabReport {
  double worst_ratio = 0.0;  // max slab mean energy / (2 e lambda)
  std::size_t checked = 0;
  std::size_t skipped = 0;   // slabs shorter than eps
  bool passed = true;
};

struct RungRecord {
  double epsilon = 0.0;
  Trajectory u;
  Diagnostics diag;
  SolveResult solve;  // x cleared
  std::vector<double> mus;
  double lambda_disc = 0.0;
  double F = 0.0;
  double F_bound = 0.0;  // (1 - e^{-T/eps}) lambda
  double minimality_margin = 0.0;
  double kinetic_margin = 0.0;    // 2 lambda (1 + tol) - weighted kinetic
  double potential_margin = 0.0;  // eps lambda (1 + tol) - weighted potential
  double monotone_margin = 0.0;   // Diagnostics margin + mono_tol lambda
  double unweighted_kinetic_margin = 0.0;  // lambda (1 + tol) - int ||d_t u||^2
  SlabReport slabs;
  HolderReport holder;
  bool valid = true;
  std::vector<std::string> failures;
};

struct LadderReport {
  std::vector<RungRecord> rungs;
  std::vector<double> cauchy;           // relative L^2(Omega_T) distance to the previous rung
  std::vector<double> cauchy_absolute;
  bool converged = false;
  Trajectory limit;
  double lambda_disc = 0.0;
  double initial_recovery_ratio = 0.0;  // max ||u(t_k) - u0||^2 / (2 t_k lambda)
  bool valid = true;                    // every rung valid
};

// Solves one rung. warm is the initial guess (nullptr: time-independent extension).
RungRecord solve_rung(double epsilon, const ProblemData& problem, const KernelSpec& spec,
                      const WideOptions& opts, const Trajectory* warm = nullptr);

// Requires a strictly decreasing schedule with at least three rungs. init is
// the starting guess of the first rung (nullptr: time-independent extension).
LadderReport run_ladder(const std::vector<double>& eps_schedule, const ProblemData& problem,
                        const KernelSpec& spec, const WideOptions& opts,
                        const Trajectory* init = nullptr);

double resolve_horizon(const std::vector<double>& eps_schedule, const WideOptions& opts);

HolderReport holder_report(const SpaceGrid& grid, const Trajectory& u, double lambda_disc,
                           double tol);
SlabReport slab_report(const Trajectory& u, std::span<const double> slice_energy,
                       double lambda_disc, double epsilon, double tol);

struct CoercivityReport {
  double poincare_constant = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
  double worst_margin = 0.0;  // min over slices of C1 E + C2 S(u0)^p - S(u)^p
  bool passed = true;
};

// Chain: S(u) = ||u||_p + [u] is bounded through the Poincare constant by the
// slice energy and the datum.
CoercivityReport coercivity_report(const ProblemData& problem, const KernelSpec& spec,
                                   const Trajectory& u, double poincare_constant);

}  // namespace nlevo
