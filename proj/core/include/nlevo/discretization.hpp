#pragma once

// Truncated one-dimensional grid over [-R, 1 + R] with Omega = (0, 1), the
// space-time trajectory container, and the discrete nonlocal energies.
//
// The energy of a slice u is the midpoint-rule approximation of the double
// integral over all ordered pairs with at least one point in Omega:
//
//   E(u) = sum_{i<j, (i,j) in C_Omega} 2 H(x_i, x_j, u_i - u_j) / |x_i - x_j| dx^2
//        + far-field correction for pairs leaving the box,
//
// where the exterior datum beyond the box is the constant value found at the
// box ends (u.front() on the left, u.back() on the right).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nlevo/kernel_density.hpp"

namespace nlevo {

struct GridPair {
  std::uint32_t i;
  std::uint32_t j;  // i < j
  double distance;
};

struct SpaceGrid {
  std::vector<double> x;
  double dx = 0.0;
  double R = 0.0;
  std::vector<std::uint8_t> omega;           // 1 iff x_i in (0, 1)
  std::vector<std::uint32_t> omega_indices;  // increasing
  std::vector<GridPair> pairs;               // C_Omega, excluding the diagonal

  std::size_t size() const noexcept { return x.size(); }
  std::size_t omega_size() const noexcept { return omega_indices.size(); }
  bool in_omega(std::size_t i) const noexcept { return omega[i] != 0; }
  // Outer edges of the midpoint cells at the box ends.
  double left_edge() const noexcept { return x.front() - 0.5 * dx; }
  double right_edge() const noexcept { return x.back() + 0.5 * dx; }
};

// Uniform grid of M points on [-R, 1 + R]. Requires M >= 8 and R >= 1.
SpaceGrid build_grid(double R, std::size_t M);

// Space-time array u[k][i], k = 0..K. Entries at k = 0 and at grid points
// outside Omega are frozen to the datum.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(const SpaceGrid& grid, std::size_t K, double T);

  std::size_t steps() const noexcept { return K_; }
  std::size_t points() const noexcept { return M_; }
  double dt() const noexcept { return dt_; }
  double horizon() const noexcept { return dt_ * static_cast<double>(K_); }
  double time(std::size_t k) const noexcept { return dt_ * static_cast<double>(k); }

  std::span<double> slice(std::size_t k) noexcept { return {values_.data() + k * M_, M_}; }
  std::span<const double> slice(std::size_t k) const noexcept {
    return {values_.data() + k * M_, M_};
  }
  double& operator()(std::size_t k, std::size_t i) noexcept { return values_[k * M_ + i]; }
  double operator()(std::size_t k, std::size_t i) const noexcept { return values_[k * M_ + i]; }

  bool frozen(std::size_t k, std::size_t i) const noexcept { return k == 0 || exterior_[i] != 0; }

  std::span<double> data() noexcept { return values_; }
  std::span<const double> data() const noexcept { return values_; }

  // Writes the datum into every frozen entry (and, if requested, everywhere).
  void fill_from_datum(std::span<const double> u0, bool everywhere = false);

  // Number of free entries: K * |Omega|.
  std::size_t free_size() const noexcept { return K_ * free_points_.size(); }
  std::vector<double> free_values() const;
  void set_free_values(std::span<const double> v);
  std::span<const std::uint32_t> free_points() const noexcept { return free_points_; }

  // Largest |u - u0| over frozen entries; zero when the constraint holds exactly.
  double frozen_defect(std::span<const double> u0) const;

 private:
  std::size_t K_ = 0;
  std::size_t M_ = 0;
  double dt_ = 0.0;
  std::vector<double> values_;
  std::vector<std::uint8_t> exterior_;
  std::vector<std::uint32_t> free_points_;
};

enum class DatumShape { Constant, Bump, Step, Ramp };

std::string to_string(DatumShape d);
DatumShape datum_from_string(const std::string& name);

// Datum sampled on the grid:
//   Constant  u0 = c
//   Bump      u0 = c + A sin(pi x) on Omega, c elsewhere
//   Step      u0 = c + A on Omega, c elsewhere
//   Ramp      u0 = c + A clamp(x, 0, 1)
std::vector<double> sample_datum(const SpaceGrid& grid, DatumShape shape, double exterior,
                                 double amplitude);

// Discrete energy with cached per-pair kernel factors. Immutable after
// construction and safe to share between threads.
class DiscreteEnergy {
 public:
  DiscreteEnergy(const KernelSpec& spec, const SpaceGrid& grid);

  const KernelSpec& spec() const noexcept { return spec_; }
  const SpaceGrid& grid() const noexcept { return *grid_; }

  double operator()(std::span<const double> u) const;
  // Returns the energy and writes dE/du_i for every grid index into grad.
  double value_and_gradient(std::span<const double> u, std::span<double> grad) const;
  double tail(std::span<const double> u) const;
  double pair_sum(std::span<const double> u) const;

 private:
  [[noreturn]] void report_non_finite(std::span<const double> u) const;

  KernelSpec spec_;
  const SpaceGrid* grid_;
  std::vector<PairFactors> factors_;
  std::vector<double> weights_;     // 2 dx^2 / |x_i - x_j|
  std::vector<double> left_dist_;   // per Omega point
  std::vector<double> right_dist_;  // per Omega point
};

double energy_slice(const KernelSpec& spec, const SpaceGrid& grid, std::span<const double> u);
double tail_correction(const KernelSpec& spec, const SpaceGrid& grid, std::span<const double> u);

struct DiscreteNorms {
  double lp_norm = 0.0;
  double gagliardo_seminorm = 0.0;
  double sobolev_norm = 0.0;
};

// L^p over the whole truncated grid and the Gagliardo seminorm over every
// ordered grid pair i != j; sobolev_norm is their sum.
DiscreteNorms discrete_norms(const SpaceGrid& grid, std::span<const double> u, double p,
                             double s);

struct PoincareEstimate {
  double constant = 0.0;  // C with ||u||_p^p <= C [u]^p
  double rayleigh = 0.0;  // min [u]^p / ||u||_p^p = 1 / C
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> eigenvector;  // minimizing u, normalized in L^p(Omega)
};

// Minimizes the Rayleigh quotient over slices vanishing outside Omega by
// normalized gradient descent. Requires p >= 2 and iterations >= 100.
PoincareEstimate estimate_poincare(const SpaceGrid& grid, double p, double s,
                                   std::size_t iterations);

// Problem data shared by every solver: grid, datum, discrete energy of the datum.
struct ProblemData {
  SpaceGrid grid;
  std::vector<double> u0;
  double lambda_disc = 0.0;

  // Datum values beyond the truncated box.
  double exterior_left() const noexcept { return u0.front(); }
  double exterior_right() const noexcept { return u0.back(); }
};

ProblemData make_problem(SpaceGrid grid, std::vector<double> u0, const KernelSpec& spec);

// Discrete L^2(Omega) norm of a slice: (sum_{i in Omega} u_i^2 dx)^{1/2}.
double l2_omega(const SpaceGrid& grid, std::span<const double> u);
// Trapezoid-in-time L^2(Omega x (0, T)) norm of a - b (b may be empty for ||a||).
double l2_space_time(const SpaceGrid& grid, const Trajectory& a, const Trajectory* b = nullptr);

}  // namespace nlevo
