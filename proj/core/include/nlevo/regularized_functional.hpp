#pragma once

// The exponentially weighted space-time functional
//
//   F_eps(u) = int_0^T e^{-t/eps} [ 1/2 ||d_t u||^2_{L^2(Omega)} + E(u(t)) / eps ] dt
//
// discretized with u piecewise linear in time. The kinetic term is exact for
// the linear interpolant; the energy is interpolated linearly between the
// slice energies E_k and E_{k+1} and integrated against the weight exactly:
//
//   F = sum_k  w_k L_k  +  (a_k E_k + b_k E_{k+1}) / eps,
//   w_k = int_{t_k}^{t_{k+1}} e^{-t/eps} dt,  b_k = int e^{-t/eps} (t - t_k)/dt dt,
//   a_k = w_k - b_k,  L_k = 1/2 sum_{i in Omega} ((u_{k+1,i} - u_{k,i}) / dt)^2 dx.
//
// Every weight is e^{-t_k/eps} times a k-independent constant, so all
// internal arithmetic uses the scaled constants and ratios; nothing
// underflows even when T/eps is large.

#include <cstddef>
#include <span>
#include <vector>

#include "nlevo/discretization.hpp"

namespace nlevo {

struct FunctionalParams {
  double epsilon = 0.0;
  double dt = 0.0;
  std::size_t K = 0;
  double lambda_disc = 0.0;
  double mu = 0.0;
  // Scaled weights: w_k = e^{-t_k/eps} w_hat, etc.
  double w_hat = 0.0;
  double a_hat = 0.0;
  double b_hat = 0.0;
  double decay = 0.0;  // e^{-dt/eps}

  double horizon() const noexcept { return dt * static_cast<double>(K); }
  // Absolute weights; these underflow to zero for large t_k / eps.
  std::vector<double> weights() const;
  // Closed form of sum_k w_k.
  double weight_total() const;
};

FunctionalParams make_params(double epsilon, const Trajectory& traj, double lambda_disc,
                             double mu);

struct Diagnostics {
  std::vector<double> L;  // per interval k = 0..K-1
  std::vector<double> G;  // L_k + (a_k E_k + b_k E_{k+1}) / (w_k eps)
  std::vector<double> I;  // sum_{m >= k} w_m G_m, k = 0..K (I_K = 0)
  std::vector<double> J;  // e^{t_k/eps} I_k
  std::vector<double> E;  // slice energies, k = 0..K
  double monotone_margin = 0.0;  // min_k J_k - J_{k+1}
  double F = 0.0;
  double weighted_kinetic = 0.0;    // int e^{-t/eps} ||d_t u||^2
  double weighted_potential = 0.0;  // int e^{-t/eps} E(u)
  double kinetic = 0.0;             // int ||d_t u||^2
};

class RegularizedFunctional {
 public:
  RegularizedFunctional(FunctionalParams params, const DiscreteEnergy& energy);

  const FunctionalParams& params() const noexcept { return params_; }
  const DiscreteEnergy& energy() const noexcept { return *energy_; }

  double value(const Trajectory& u) const;

  // Gradient with respect to the free entries (layout of
  // Trajectory::free_values). The scaled form divides slice k by its metric
  // weight m_k dx, m_k = w_{k-1} + w_k (m_K = w_{K-1}); it is what the
  // optimizer iterates on and it never underflows.
  double value_and_gradient(const Trajectory& u, std::span<double> grad, bool scaled) const;

  // Metric weights m_k / m_1 dx for every free entry; inner products with
  // these weights equal the raw pairing up to the positive factor m_1.
  std::vector<double> relative_metric(const Trajectory& u) const;

  Diagnostics diagnostics(const Trajectory& u) const;

 private:
  std::vector<double> slice_energies(const Trajectory& u) const;

  FunctionalParams params_;
  const DiscreteEnergy* energy_;
};

// Free-function forms.
double eval_F(const FunctionalParams& params, const KernelSpec& spec, const SpaceGrid& grid,
              const Trajectory& u);
std::vector<double> grad_F(const FunctionalParams& params, const KernelSpec& spec,
                           const SpaceGrid& grid, const Trajectory& u);
Diagnostics diagnostics(const FunctionalParams& params, const KernelSpec& spec,
                        const SpaceGrid& grid, const Trajectory& u);

}  // namespace nlevo
