#pragma once

// Exponential time mollification
//   [v]_h(t) = e^{-t/h} v0 + (1/h) int_0^t e^{(s-t)/h} v(s) ds
// of a trajectory read as piecewise constant in time, v = v_{k+1} on
// (t_k, t_{k+1}]. For that interpretation the per-step recurrence
//   [v]_h(t_{k+1}) = v_{k+1} + e^{-dt/h} ([v]_h(t_k) - v_{k+1})
// is exact. Space-time norms use right-endpoint sums over k = 1..K, which
// match the same interpretation.

#include <cstddef>
#include <span>
#include <vector>

#include "nlevo/discretization.hpp"

namespace nlevo {

struct MollifierParams {
  double h = 0.0;
  std::vector<double> v0;  // empty: use the trajectory's first slice
};

Trajectory mollify(const Trajectory& v, const MollifierParams& params);

// Max over steps and points of the integrated-form residual of
// d/dt [v]_h = -([v]_h - v)/h on each step.
double mollify_derivative_check(const Trajectory& v, const Trajectory& mollified,
                                const MollifierParams& params);

// ||f||_{L^p(Omega_T)} with right-endpoint time sums; g optional (f - g).
double lp_space_time(const SpaceGrid& grid, const Trajectory& f, double p,
                     const Trajectory* g = nullptr);
// ||v0||_{L^p(Omega)}
double lp_omega(const SpaceGrid& grid, std::span<const double> v, double p);
// sum_{k=1..K} dt E(v_k)
double energy_integral(const DiscreteEnergy& energy, const Trajectory& v);

struct MollifierRow {
  double h = 0.0;
  double lp_gap = 0.0;      // ||[v]_h - v||_{L^p}
  double l2_gap = 0.0;      // ||[v]_h - v||_{L^2}
  double energy_gap = 0.0;  // |int int H([v]_h) - int int H(v)|
  double bound_margin = 0.0;  // ||v||_p + h^{1/p} ||v0||_p - ||[v]_h||_p
  double residual = 0.0;      // mollify_derivative_check
  double jensen_margin = 0.0;
};

struct MollifierTable {
  std::vector<MollifierRow> rows;
  double l2_slope = 0.0;      // least-squares slope of log l2_gap against log h
  double energy_slope = 0.0;  // same for energy_gap
  bool gaps_decreasing = true;
  bool energy_decreasing = true;
  double v_scale = 0.0;  // ||v||_{L^p}
  bool final_gap_small = true;  // lp_gap(h_min) <= 10 (h_min / T) v_scale
};

MollifierTable mollifier_convergence(const Trajectory& v, std::span<const double> h_schedule,
                                     const DiscreteEnergy& energy, double p);

// Pointwise convexity transport on sampled pairs:
//   min over (pair, k) of [H(xi)]_h + e^{-t_k/h} H(xi_0) - H([v]_h(x) - [v]_h(y)),
// with [H(xi)]_h mollified from zero initial value. Nonnegative up to rounding.
double jensen_margin(const DiscreteEnergy& energy, const Trajectory& v, const Trajectory& mollified,
                     const MollifierParams& params, std::size_t max_pairs = 256);

// Smooth-in-time demonstration trajectory
//   v(x, t) = u0(x) + sin(2 t / T) sin(pi x) on Omega, u0 elsewhere.
Trajectory smooth_demo_trajectory(const SpaceGrid& grid, std::span<const double> u0,
                                  std::size_t K, double T);

}  // namespace nlevo
