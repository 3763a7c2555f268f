#pragma once

// Independent checks of a computed solution: the variational inequality,
// the parabolic minimality condition, uniqueness, and agreement with an
// implicit Euler stepper and (for the fractional heat equation) an exact
// spectral solution.
//
// Time integrals treat trajectories as piecewise linear in time, so
//   int d_t v (v - u)   = sum_k <v_{k+1} - v_k, ((v - u)_k + (v - u)_{k+1}) / 2>
//   int E(u)            = trapezoid sum of slice energies.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "nlevo/discretization.hpp"
#include "nlevo/optimizer.hpp"
#include "nlevo/wide_driver.hpp"

namespace nlevo {

double trapezoid_energy(const DiscreteEnergy& energy, const Trajectory& u);

// RHS - LHS of the variational inequality over C_Omega. Nonnegative for the
// exact solution; v must agree with the datum outside Omega.
double check_variational_inequality(const Trajectory& u, const Trajectory& v,
                                    const ProblemData& problem, const DiscreteEnergy& energy);

// RHS - LHS of the parabolic minimality condition for the test trajectory
// phi, which must vanish at k = 0, k = K and outside Omega.
double check_parabolic_minimizer(const Trajectory& u, const Trajectory& phi,
                                 const ProblemData& problem, const DiscreteEnergy& energy);

// Limit of margin(s phi) / s as s -> 0 by Richardson extrapolation over
// s = 1e-1, 1e-2, 1e-3.
double first_variation_limit(const Trajectory& u, const Trajectory& phi,
                             const ProblemData& problem, const DiscreteEnergy& energy);

struct ComparisonMap {
  Trajectory v;
  std::string family;
  double amplitude = 0.0;
};

// count >= 4 comparison maps: u itself, the time-independent extension U,
// mollified u, and random smooth perturbations of u and [u]_h.
std::vector<ComparisonMap> comparison_battery(const Trajectory& u, const ProblemData& problem,
                                              std::size_t count, std::uint64_t seed);

// count compactly supported test trajectories sigma sin(j pi x) b(t), where b
// is a sin^2 bump on a random subinterval and sigma in {+-0.1, +-1}.
std::vector<ComparisonMap> test_function_battery(const Trajectory& u, const ProblemData& problem,
                                                 std::size_t count, std::uint64_t seed);

struct BatteryReport {
  std::vector<std::string> labels;
  std::vector<double> margins;
  double worst = 0.0;
  double tol = 0.0;
  bool passed = true;
};

double default_violation_tol(double lambda_disc);

BatteryReport variational_battery(const Trajectory& u, const ProblemData& problem,
                                  const DiscreteEnergy& energy, std::size_t count,
                                  std::uint64_t seed, double tol);
BatteryReport parabolic_battery(const Trajectory& u, const ProblemData& problem,
                                const DiscreteEnergy& energy, std::size_t count,
                                std::uint64_t seed, double tol);

// Copy of u with one interior time slice overwritten by uniform noise in
// [-a, a], a = 1 + max |u|.
Trajectory corrupt(const Trajectory& u, const SpaceGrid& grid, std::uint64_t seed);

struct UniquenessReport {
  std::vector<double> gaps;  // pairwise L^2(Omega_T) distances
  double max_gap = 0.0;
  double tol = 0.0;
  bool passed = true;
};

// Runs the ladder from the time-independent extension and from two random
// initial trajectories; tol = 1e-4 (1 + ||u0||_{L^2(Omega)}).
UniquenessReport check_uniqueness(const ProblemData& problem, const KernelSpec& spec,
                                  const std::vector<double>& eps_schedule,
                                  const WideOptions& opts, std::uint64_t seed);

struct EulerResult {
  Trajectory u;
  std::vector<double> residuals;  // per-step gradient max-norm
  std::vector<double> energies;   // E(u^k)
  bool dissipative = true;
  bool converged = true;
};

// Minimizing movement: u^{k+1} = argmin 1/2 ||w - u^k||^2_{L^2(Omega)} / dt + E(w).
EulerResult implicit_euler_solve(const ProblemData& problem, const KernelSpec& spec,
                                 std::size_t K, double T, const SolveOptions& opts);

// Fractional heat equation on the Omega unknowns: u' + A u = b.
struct HeatSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};
HeatSystem assemble_heat_system(const SpaceGrid& grid, std::span<const double> u0, double s);

// Exact-in-time solution at t_k = k T / K, assembled independently of the
// energy code. Requires PurePhase with p = 2.
Trajectory spectral_oracle_p2(const ProblemData& problem, const KernelSpec& spec, std::size_t K,
                              double T);
std::vector<double> stationary_p2(const ProblemData& problem, const KernelSpec& spec);

// ||a - ref|| / ||ref|| in L^2(Omega_T).
double relative_l2(const SpaceGrid& grid, const Trajectory& a, const Trajectory& ref);

struct WeakComparison {
  double wide_vs_euler = 0.0;
  double wide_vs_spectral = -1.0;  // -1 when no oracle
  double euler_vs_spectral = -1.0;
};
WeakComparison compare_weak(const SpaceGrid& grid, const Trajectory& wide, const Trajectory& euler,
                            const Trajectory* spectral);

// Max relative error of the raw functional gradient against central
// differences with step 1e-6 on a random M = 8, K = 3 instance.
double gradient_check(const KernelSpec& spec, std::uint64_t seed);

}  // namespace nlevo
