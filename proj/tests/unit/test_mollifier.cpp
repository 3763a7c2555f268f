#include <gtest/gtest.h>

#include <cmath>

#include "nlevo/errors.hpp"
#include "nlevo/mollifier.hpp"
#include "oracles.hpp"

using namespace nlevo;

namespace {

Trajectory random_trajectory(const SpaceGrid& g, std::size_t K, double T, std::uint64_t seed) {
  Trajectory v(g, K, T);
  const auto r = oracle::random_vector((K + 1) * g.size(), seed, -2.0, 2.0);
  std::copy(r.begin(), r.end(), v.data().begin());
  return v;
}

// e^{-t/h} v0 + (1/h) int_0^t e^{(s-t)/h} v(s) ds with v = v_{m+1} on
// (t_m, t_{m+1}], summed interval by interval.
double direct(const Trajectory& v, const std::vector<double>& v0, double h, std::size_t k,
              std::size_t i) {
  const double t = v.time(k);
  long double acc = std::exp(-t / h) * v0[i];
  for (std::size_t m = 0; m < k; ++m) {
    const double a = v.time(m), b = v.time(m + 1);
    acc += v(m + 1, i) * (std::exp((b - t) / h) - std::exp((a - t) / h));
  }
  return static_cast<double>(acc);
}

}  // namespace

TEST(Mollify, ConstantsAreFixedPoints) {
  const auto g = build_grid(1.0, 16);
  Trajectory v(g, 20, 1.0);
  for (double& x : v.data()) x = 0.37;
  const auto m = mollify(v, {0.1, {}});
  for (double x : m.data()) EXPECT_EQ(x, 0.37);
  EXPECT_EQ(mollify_derivative_check(v, m, {0.1, {}}), 0.0);
}

TEST(Mollify, UnitStepFromZero) {
  const auto g = build_grid(1.0, 16);
  Trajectory v(g, 50, 2.0);
  for (double& x : v.data()) x = 1.0;
  const MollifierParams mp{0.3, std::vector<double>(g.size(), 0.0)};
  const auto m = mollify(v, mp);
  for (std::size_t k = 0; k <= 50; ++k)
    for (std::size_t i = 0; i < g.size(); ++i)
      EXPECT_NEAR(m(k, i), -std::expm1(-v.time(k) / 0.3), 1e-15);
  EXPECT_LE(mollify_derivative_check(v, m, mp), 1e-12);
}

TEST(Mollify, MatchesDirectQuadrature) {
  const auto g = build_grid(1.0, 16);
  const auto v = random_trajectory(g, 64, 2.0, 4);
  const auto v0 = oracle::random_vector(g.size(), 5);
  const auto m = mollify(v, {0.3, v0});
  for (std::size_t k = 0; k <= 64; ++k)
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(m(k, i), direct(v, v0, 0.3, k, i), 1e-12);
}

TEST(Mollify, ResidualOnRandomTrajectories) {
  const auto g = build_grid(1.0, 16);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto v = random_trajectory(g, 40, 1.0, seed);
    for (double h : {0.01, 0.3, 5.0}) {
      const MollifierParams mp{h, {}};
      EXPECT_LE(mollify_derivative_check(v, mollify(v, mp), mp), 1e-12);
    }
  }
}

TEST(Mollify, RejectsNonpositiveScale) {
  const auto g = build_grid(1.0, 16);
  const Trajectory v(g, 4, 1.0);
  EXPECT_THROW(mollify(v, {0.0, {}}), DomainError);
  EXPECT_THROW(mollify(v, {-1.0, {}}), DomainError);
}

TEST(Norms, RightEndpointSums) {
  const auto g = build_grid(1.0, 16);
  Trajectory v(g, 4, 2.0);
  for (std::size_t i = 0; i < g.size(); ++i) v(0, i) = 100.0;  // excluded from the sums
  for (std::size_t k = 1; k <= 4; ++k)
    for (auto i : g.omega_indices) v(k, i) = 2.0;
  const double len = g.dx * static_cast<double>(g.omega_size());
  EXPECT_NEAR(lp_space_time(g, v, 3.0), std::cbrt(8.0 * len * 2.0), 1e-13);
  EXPECT_NEAR(lp_omega(g, v.slice(1), 2.0), std::sqrt(4.0 * len), 1e-14);
}

TEST(Convergence, ContractionBoundOnRandomTrajectories) {
  const auto g = build_grid(1.0, 16);
  const DiscreteEnergy E(KernelSpec::pure(2.0, 0.5), g);
  const std::vector<double> hs{0.5, 0.2, 0.1};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const double p = 1.5 + 0.1 * static_cast<double>(seed % 10);
    const auto v = random_trajectory(g, 32, 1.0, 1000 + seed);
    const auto table = mollifier_convergence(v, hs, E, p);
    for (const auto& row : table.rows) EXPECT_GE(row.bound_margin, 0.0) << seed << " h=" << row.h;
  }
}

TEST(Convergence, StationaryTrajectoryHasZeroGaps) {
  const auto g = build_grid(1.0, 16);
  const DiscreteEnergy E(KernelSpec::pure(2.0, 0.5), g);
  const auto u0 = sample_datum(g, DatumShape::Bump, 0.0, 1.0);
  Trajectory v(g, 16, 1.0);
  v.fill_from_datum(u0, true);
  const std::vector<double> hs{0.4, 0.2, 0.1};
  for (const auto& row : mollifier_convergence(v, hs, E, 2.0).rows) {
    EXPECT_EQ(row.lp_gap, 0.0);
    EXPECT_EQ(row.energy_gap, 0.0);
  }
}

TEST(Convergence, FirstOrderRateOnSmoothTrajectory) {
  const auto g = build_grid(1.0, 32);
  const auto u0 = sample_datum(g, DatumShape::Bump, 1.0, 1.0);
  const auto v = smooth_demo_trajectory(g, u0, 1024, 1.0);
  const DiscreteEnergy E(KernelSpec::pure(2.0, 0.5), g);
  const std::vector<double> hs{0.08, 0.04, 0.02, 0.01, 0.005};
  const auto t = mollifier_convergence(v, hs, E, 2.0);
  EXPECT_TRUE(t.gaps_decreasing);
  EXPECT_TRUE(t.energy_decreasing);
  EXPECT_TRUE(t.final_gap_small);
  EXPECT_GE(t.l2_slope, 0.8);
  EXPECT_LE(t.l2_slope, 1.2);
  EXPECT_GE(t.energy_slope, 0.8);
  EXPECT_LE(t.energy_slope, 1.2);
  for (const auto& row : t.rows) {
    EXPECT_LE(row.residual, 1e-12);
    EXPECT_GE(row.jensen_margin, -1e-12);
  }
}

TEST(Jensen, TransportOnRandomTrajectories) {
  const auto g = build_grid(1.0, 16);
  for (const auto& k : {KernelSpec::pure(1.5, 0.5, 0.1), KernelSpec::log_phase(2.0, 0.5),
                        KernelSpec::double_phase(2.0, 4.0, 0.5, 0.5, 1.0)}) {
    const DiscreteEnergy E(k, g);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto v = random_trajectory(g, 24, 1.0, 70 + seed);
      const MollifierParams mp{0.15, oracle::random_vector(g.size(), 80 + seed)};
      EXPECT_GE(jensen_margin(E, v, mollify(v, mp), mp), -1e-12);
    }
  }
}
