#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <set>

#include "nlevo/discretization.hpp"
#include "nlevo/errors.hpp"
#include "oracles.hpp"

using namespace nlevo;

namespace {

std::vector<double> omega_random(const SpaceGrid& g, std::uint64_t seed, double c) {
  auto r = oracle::random_vector(g.size(), seed);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!g.in_omega(i)) r[i] = c;
  return r;
}

}  // namespace

TEST(Grid, UnitSpacingExample) {
  const auto g = build_grid(1.0, 31);
  EXPECT_NEAR(g.dx, 0.1, 1e-15);
  ASSERT_EQ(g.omega_size(), 9u);
  EXPECT_NEAR(g.x[g.omega_indices.front()], 0.1, 1e-12);
  EXPECT_NEAR(g.x[g.omega_indices.back()], 0.9, 1e-12);
  EXPECT_EQ(g.x.front(), -1.0);
  EXPECT_EQ(g.x.back(), 2.0);
}

TEST(Grid, PairSetCompleteness) {
  for (std::size_t M : {8u, 13u, 20u, 32u}) {
    const auto g = build_grid(1.0, M);
    std::set<std::pair<std::uint32_t, std::uint32_t>> have;
    for (const auto& p : g.pairs) {
      EXPECT_LT(p.i, p.j);
      EXPECT_TRUE(have.insert({p.i, p.j}).second);
    }
    std::size_t outside = 0;
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = i + 1; j < M; ++j) {
        const bool in = oracle::in_omega(g.x[i]) || oracle::in_omega(g.x[j]);
        EXPECT_EQ(have.count({i, j}) == 1, in);
        if (!in) ++outside;
      }
    EXPECT_EQ(g.pairs.size() + outside, M * (M - 1) / 2);
  }
}

TEST(Grid, RejectsInvalidSizes) {
  EXPECT_THROW(build_grid(1.0, 7), ConfigError);
  EXPECT_THROW(build_grid(0.5, 64), ConfigError);
  const auto g = build_grid(1.0, 16);
  EXPECT_THROW(Trajectory(g, 1, 1.0), ConfigError);
}

TEST(Trajectory, TimeStep) {
  const auto g = build_grid(1.0, 16);
  const Trajectory u(g, 2, 1.0);
  EXPECT_EQ(u.dt(), 0.5);
  EXPECT_EQ(u.time(2), 1.0);
}

TEST(Trajectory, FreeLayoutRoundTrip) {
  const auto g = build_grid(1.0, 16);
  Trajectory u(g, 3, 1.0);
  const auto u0 = sample_datum(g, DatumShape::Bump, 1.0, 1.0);
  u.fill_from_datum(u0, true);
  EXPECT_EQ(u.free_size(), 3 * g.omega_size());
  auto v = oracle::random_vector(u.free_size(), 3);
  u.set_free_values(v);
  EXPECT_EQ(u.free_values(), v);
  EXPECT_EQ(u.frozen_defect(u0), 0.0);
  EXPECT_EQ(u(1, g.omega_indices[0]), v[0]);
  EXPECT_EQ(u(2, g.omega_indices[1]), v[g.omega_size() + 1]);
}

TEST(Energy, ConstantMatchingExteriorIsZero) {
  const auto g = build_grid(1.0, 32);
  for (const auto& k : {KernelSpec::pure(2.0, 0.5), KernelSpec::log_phase(2.0, 0.3, 0.1),
                        KernelSpec::double_phase(2.0, 4.0, 0.5, 0.5, 1.0, 0.2)}) {
    std::vector<double> u(g.size(), 1.7);
    EXPECT_EQ(energy_slice(k, g, u), 0.0);
    EXPECT_EQ(tail_correction(k, g, u), 0.0);
  }
}

TEST(Energy, ConstantInteriorOffsetIsTailPlusCrossPairs) {
  // Interior constant differing from the exterior: pairs inside Omega vanish,
  // the rest is the brute-force sum.
  const auto g = build_grid(1.0, 24);
  std::vector<double> u(g.size(), 0.0);
  for (auto i : g.omega_indices) u[i] = 1.0;
  const auto k = KernelSpec::pure(2.0, 0.5);
  EXPECT_NEAR(energy_slice(k, g, u), oracle::pure_energy(2.0, 0.5, g.x, g.dx, u), 1e-12);
}

TEST(Energy, IndicatorMatchesDoubleLoop) {
  const auto g = build_grid(1.0, 8);
  std::vector<double> u(g.size(), 0.0);
  for (auto i : g.omega_indices) u[i] = 1.0;
  const double ref = oracle::pure_energy(2.0, 0.25, g.x, g.dx, u);
  EXPECT_NEAR(energy_slice(KernelSpec::pure(2.0, 0.25), g, u), ref, 1e-12 * ref);
}

TEST(Energy, RandomSlicesMatchDoubleLoop) {
  for (std::size_t M : {8u, 17u, 32u})
    for (double p : {1.5, 2.0, 3.0}) {
      const auto g = build_grid(1.0, M);
      const auto u = omega_random(g, M * 31 + static_cast<std::uint64_t>(p * 10), 0.4);
      const double ref = oracle::pure_energy(p, 0.4, g.x, g.dx, u);
      EXPECT_NEAR(energy_slice(KernelSpec::pure(p, 0.4), g, u), ref, 1e-12 * ref) << M << " " << p;
    }
}

TEST(Energy, PairSumMatchesDoubleLoopForSmoothedVariants) {
  const auto g = build_grid(1.5, 32);
  auto u = omega_random(g, 11, -0.3);
  u.front() = -0.3;
  u.back() = 0.6;  // different exterior constants on the two sides
  for (const auto& k : {KernelSpec::pure(1.5, 0.5, 0.1), KernelSpec::log_phase(2.0, 0.3, 0.05),
                        KernelSpec::double_phase(2.0, 4.0, 0.5, 0.25, 0.8, 0.1)}) {
    const DiscreteEnergy E(k, g);
    const double ref = oracle::pair_energy(k, g.x, g.dx, u, 0.8);
    EXPECT_NEAR(E.pair_sum(u), ref, 1e-12 * ref) << to_string(k.variant);
  }
}

TEST(Energy, TailMatchesFineQuadrature) {
  const auto g = build_grid(1.0, 24);
  auto u = omega_random(g, 5, 0.2);
  u.back() = -0.5;
  for (const auto& k : {KernelSpec::pure(2.0, 0.5), KernelSpec::pure(1.5, 0.5, 0.1),
                        KernelSpec::log_phase(2.0, 0.3, 0.05),
                        KernelSpec::double_phase(2.0, 4.0, 0.5, 0.25, 0.8, 0.1)}) {
    double ref = 0.0;
    for (auto i : g.omega_indices) {
      ref += 2.0 * g.dx * oracle::tail_quadrature(k, u[i] - u.front(), g.x[i] - g.left_edge(), 0.8);
      ref += 2.0 * g.dx * oracle::tail_quadrature(k, u[i] - u.back(), g.right_edge() - g.x[i], 0.8);
    }
    EXPECT_NEAR(tail_correction(k, g, u), ref, 1e-3 * ref) << to_string(k.variant);
  }
}

TEST(Energy, TailSinglePointExample) {
  // One Omega point with a unit jump, p = 2, s = 1/2: each side contributes
  // 2 dx / d, so 4 dx when both edge distances are one.
  SpaceGrid g = build_grid(1.0, 31);
  std::vector<double> u(g.size(), 0.0);
  const std::size_t mid = g.omega_indices[4];  // x = 0.5
  u[mid] = 1.0;
  const double d_left = g.x[mid] - g.left_edge();
  const double d_right = g.right_edge() - g.x[mid];
  const double expected = 2.0 * g.dx * (1.0 / d_left + 1.0 / d_right);
  EXPECT_NEAR(tail_correction(KernelSpec::pure(2.0, 0.5), g, u), expected, 1e-14);
}

TEST(Energy, GradientMatchesCentralDifference) {
  const auto g = build_grid(1.0, 16);
  auto u = omega_random(g, 21, 0.5);
  for (const auto& k : {KernelSpec::pure(2.0, 0.5), KernelSpec::pure(1.5, 0.5, 0.1),
                        KernelSpec::log_phase(2.0, 0.3, 0.05),
                        KernelSpec::double_phase(2.0, 4.0, 0.5, 0.25, 0.8, 0.1)}) {
    const DiscreteEnergy E(k, g);
    std::vector<double> grad(g.size());
    E.value_and_gradient(u, grad);
    for (auto i : g.omega_indices) {
      auto up = u, dn = u;
      up[i] += 1e-6;
      dn[i] -= 1e-6;
      const double fd = (E(up) - E(dn)) / 2e-6;
      EXPECT_NEAR(grad[i], fd, 1e-5 * std::max(std::abs(fd), 1e-3)) << to_string(k.variant);
    }
  }
}

TEST(Energy, NonFiniteInputNamesThePair) {
  const auto g = build_grid(1.0, 16);
  std::vector<double> u(g.size(), 0.0);
  u[g.omega_indices[2]] = std::nan("");
  try {
    energy_slice(KernelSpec::pure(2.0, 0.5), g, u);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("pair"), std::string::npos) << e.what();
  }
}

TEST(Energy, SelfConvergenceUnderRefinement) {
  // Smooth datum: relative change between M = 32 and M = 64 recorded as a
  // refinement factor, then tightened from 64 to 128.
  const auto k = KernelSpec::pure(2.0, 0.5);
  double prev = 0.0, prev_change = 0.0;
  for (std::size_t M : {32u, 64u, 128u}) {
    const auto g = build_grid(1.0, M);
    const double e = energy_slice(k, g, sample_datum(g, DatumShape::Bump, 0.0, 1.0));
    if (prev != 0.0) {
      const double change = std::abs(e - prev) / prev;
      RecordProperty("relative_change_M" + std::to_string(M), std::to_string(change));
      EXPECT_LT(change, 0.1);
      if (prev_change != 0.0) EXPECT_LT(change, prev_change);
      prev_change = change;
    }
    prev = e;
  }
}

TEST(Energy, LambdaIsDatumEnergy) {
  const auto g = build_grid(1.0, 32);
  const auto k = KernelSpec::pure(3.0, 0.5);
  auto u0 = sample_datum(g, DatumShape::Bump, 1.0, 1.0);
  const auto prob = make_problem(g, u0, k);
  EXPECT_EQ(prob.lambda_disc, energy_slice(k, prob.grid, u0));
}

TEST(Energy, CoercivityWitnessInteriorShift) {
  // Minimizer of the p = 2 energy under a nonzero exterior datum; shifting its
  // interior by a constant increases the energy.
  const auto g = build_grid(1.0, 24);
  const auto u0 = sample_datum(g, DatumShape::Ramp, 0.5, 1.0);
  const auto heat = oracle::heat_operator(0.5, g.x, g.dx, u0);
  const Eigen::VectorXd v = heat.A.ldlt().solve(heat.b);
  auto u = u0;
  for (std::size_t a = 0; a < heat.omega.size(); ++a) u[heat.omega[a]] = v[a];
  const auto k = KernelSpec::pure(2.0, 0.5);
  const double e = energy_slice(k, g, u);
  for (double c : {-0.1, 1e-3, 0.5}) {
    auto w = u;
    for (auto i : g.omega_indices) w[i] += c;
    EXPECT_GT(energy_slice(k, g, w), e);
  }
}

TEST(Norms, Zero) {
  const auto g = build_grid(1.0, 16);
  const auto n = discrete_norms(g, std::vector<double>(g.size(), 0.0), 2.0, 0.5);
  EXPECT_EQ(n.lp_norm, 0.0);
  EXPECT_EQ(n.gagliardo_seminorm, 0.0);
  EXPECT_EQ(n.sobolev_norm, 0.0);
}

TEST(Norms, Spike) {
  const auto g = build_grid(1.0, 16);
  std::vector<double> u(g.size(), 0.0);
  u[5] = 1.0;
  EXPECT_NEAR(discrete_norms(g, u, 2.0, 0.5).lp_norm, std::sqrt(g.dx), 1e-15);
}

TEST(Norms, SeminormMatchesDoubleLoop) {
  for (double p : {1.5, 2.0, 3.0}) {
    const auto g = build_grid(1.0, 16);
    const auto u = oracle::random_vector(g.size(), 99);
    double semi = 0.0, lp = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      lp += std::pow(std::abs(u[i]), p) * g.dx;
      for (std::size_t j = 0; j < g.size(); ++j)
        if (i != j)
          semi += std::pow(std::abs(u[i] - u[j]), p) /
                  std::pow(std::abs(g.x[i] - g.x[j]), 1.0 + 0.5 * p) * g.dx * g.dx;
    }
    const auto n = discrete_norms(g, u, p, 0.5);
    EXPECT_NEAR(std::pow(n.gagliardo_seminorm, p), semi, 1e-12 * semi);
    EXPECT_NEAR(std::pow(n.lp_norm, p), lp, 1e-12 * lp);
    EXPECT_DOUBLE_EQ(n.sobolev_norm, n.lp_norm + n.gagliardo_seminorm);
  }
}

namespace {

// C = 2 dx / lambda_min of the Hessian of the zero-datum energy.
double poincare_oracle(const SpaceGrid& g, double s) {
  const std::vector<double> zero(g.size(), 0.0);
  const auto heat = oracle::heat_operator(s, g.x, g.dx, zero);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(heat.A);
  return 2.0 / es.eigenvalues().minCoeff();
}

}  // namespace

TEST(Poincare, MatchesDenseEigensolve) {
  const auto g = build_grid(1.0, 64);
  const auto est = estimate_poincare(g, 2.0, 0.5, 20000);
  const double ref = poincare_oracle(g, 0.5);
  EXPECT_TRUE(est.converged);
  EXPECT_NEAR(est.constant, ref, 1e-3 * ref);
  EXPECT_NEAR(est.rayleigh * est.constant, 1.0, 1e-12);
}

TEST(Poincare, RayleighQuotientScaleInvariant) {
  const auto g = build_grid(1.0, 32);
  const auto est = estimate_poincare(g, 3.0, 0.5, 2000);
  const auto k = KernelSpec::pure(3.0, 0.5);
  auto ratio = [&](double scale) {
    std::vector<double> u = est.eigenvector;
    for (auto& e : u) e *= scale;
    double n = 0.0;
    for (auto i : g.omega_indices) n += std::pow(std::abs(u[i]), 3.0) * g.dx;
    return energy_slice(k, g, u) / n;
  };
  EXPECT_NEAR(ratio(10.0), ratio(1.0), 1e-12 * ratio(1.0));
  EXPECT_NEAR(ratio(1.0), est.rayleigh, 1e-9 * est.rayleigh);
}

TEST(Poincare, StabilizesUnderRefinement) {
  const double c64 = estimate_poincare(build_grid(1.0, 64), 2.0, 0.5, 20000).constant;
  const double c128 = estimate_poincare(build_grid(1.0, 128), 2.0, 0.5, 20000).constant;
  EXPECT_LT(std::abs(c128 - c64) / c128, 0.02);
}

TEST(Poincare, RejectsSubquadraticAndShortBudgets) {
  const auto g = build_grid(1.0, 16);
  EXPECT_THROW(estimate_poincare(g, 1.5, 0.5, 1000), ConfigError);
  EXPECT_THROW(estimate_poincare(g, 2.0, 0.5, 10), ConfigError);
}

TEST(SpaceTime, L2NormsTrapezoid) {
  const auto g = build_grid(1.0, 16);
  Trajectory a(g, 4, 2.0);
  for (std::size_t k = 0; k <= 4; ++k)
    for (auto i : g.omega_indices) a(k, i) = 1.0;
  // ||1||^2 over Omega points and (0, T).
  const double omega_len = g.dx * static_cast<double>(g.omega_size());
  EXPECT_NEAR(l2_space_time(g, a), std::sqrt(2.0 * omega_len), 1e-14);
  EXPECT_NEAR(l2_omega(g, a.slice(0)), std::sqrt(omega_len), 1e-14);
  EXPECT_EQ(l2_space_time(g, a, &a), 0.0);
}
