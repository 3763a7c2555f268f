#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <memory>

#include "nlevo/errors.hpp"
#include "nlevo/verification.hpp"
#include "nlevo/wide_driver.hpp"
#include "oracles.hpp"

using namespace nlevo;

namespace {

const std::vector<double> kLadder{0.2, 0.1, 0.05};

WideOptions small_options() {
  WideOptions o;
  o.K = 32;
  return o;
}

class HeatLadder : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    spec_ = std::make_unique<KernelSpec>(KernelSpec::pure(2.0, 0.5));
    const auto g = build_grid(1.0, 32);
    problem_ = std::make_unique<ProblemData>(
        make_problem(g, sample_datum(g, DatumShape::Bump, 1.0, 1.0), *spec_));
    report_ = std::make_unique<LadderReport>(run_ladder(kLadder, *problem_, *spec_, small_options()));
  }
  static void TearDownTestSuite() {
    report_.reset();
    problem_.reset();
    spec_.reset();
  }
  static std::unique_ptr<KernelSpec> spec_;
  static std::unique_ptr<ProblemData> problem_;
  static std::unique_ptr<LadderReport> report_;
};
std::unique_ptr<KernelSpec> HeatLadder::spec_;
std::unique_ptr<ProblemData> HeatLadder::problem_;
std::unique_ptr<LadderReport> HeatLadder::report_;

}  // namespace

TEST_F(HeatLadder, EveryRungSatisfiesItsBounds) {
  ASSERT_EQ(report_->rungs.size(), 3u);
  const double lam = problem_->lambda_disc;
  for (const auto& r : report_->rungs) {
    EXPECT_TRUE(r.valid) << r.epsilon << (r.failures.empty() ? "" : r.failures.front());
    EXPECT_TRUE(r.solve.converged);
    EXPECT_LE(r.F, -std::expm1(-r.u.horizon() / r.epsilon) * lam + 1e-8 * lam);
    EXPECT_LE(r.diag.weighted_kinetic, 2.0 * lam * 1.05);
    EXPECT_LE(r.diag.weighted_potential, r.epsilon * lam * 1.05);
    EXPECT_GE(r.diag.monotone_margin, -1e-6 * lam);
    EXPECT_EQ(r.u.frozen_defect(problem_->u0), 0.0);
  }
}

TEST_F(HeatLadder, PotentialScalesWithEpsilon) {
  const double lam = problem_->lambda_disc;
  for (std::size_t j = 1; j < report_->rungs.size(); ++j) {
    const auto& r = report_->rungs[j];
    EXPECT_LE(r.diag.weighted_potential / r.epsilon, lam * 1.05);
    EXPECT_LT(r.diag.weighted_potential, report_->rungs[j - 1].diag.weighted_potential);
  }
}

TEST_F(HeatLadder, LimitBounds) {
  const double lam = problem_->lambda_disc;
  EXPECT_TRUE(report_->converged);
  EXPECT_LE(report_->cauchy.back(), 0.05);
  const auto& last = report_->rungs.back();
  EXPECT_LE(last.diag.kinetic, lam * 1.05);
  EXPECT_TRUE(last.slabs.passed);
  EXPECT_GT(last.slabs.checked, 0u);
  EXPECT_TRUE(last.holder.passed);
  EXPECT_LE(report_->initial_recovery_ratio, 1.05);
}

TEST_F(HeatLadder, HolderCorruptedNegativeControl) {
  const auto bad = corrupt(report_->limit, problem_->grid, 5);
  const auto h = holder_report(problem_->grid, bad, problem_->lambda_disc, 0.05);
  EXPECT_FALSE(h.passed);
  EXPECT_LT(h.worst_margin, 0.0);
}

TEST_F(HeatLadder, HolderDiagonalIsTrivial) {
  // A single time step pair with identical slices: 0 <= 0.
  Trajectory u(problem_->grid, 2, 1.0);
  u.fill_from_datum(problem_->u0, true);
  const auto h = holder_report(problem_->grid, u, 0.0, 0.05);
  EXPECT_TRUE(h.passed);
  EXPECT_EQ(h.worst_margin, 0.0);
}

TEST_F(HeatLadder, CoercivityChainHolds) {
  const double C = estimate_poincare(problem_->grid, 2.0, 0.5, 5000).constant;
  const auto rep = coercivity_report(*problem_, *spec_, report_->limit, C);
  EXPECT_TRUE(rep.passed) << rep.worst_margin;
}

TEST(SolveRung, StationaryDatumStaysPut) {
  // Exterior data 0 on the left and 2 on the right; the interior is the
  // discrete s-harmonic extension, so U is the minimizer of every rung.
  const auto g = build_grid(1.0, 24);
  auto u0 = sample_datum(g, DatumShape::Constant, 0.0, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.x[i] >= 1.0) u0[i] = 2.0;
  const auto heat = oracle::heat_operator(0.5, g.x, g.dx, u0);
  const Eigen::VectorXd v = heat.A.ldlt().solve(heat.b);
  for (std::size_t a = 0; a < heat.omega.size(); ++a) u0[heat.omega[a]] = v[a];
  const auto spec = KernelSpec::pure(2.0, 0.5);
  const auto prob = make_problem(g, u0, spec);
  auto opts = small_options();
  const auto r = solve_rung(0.1, prob, spec, opts);
  EXPECT_TRUE(r.valid);
  EXPECT_LE(r.diag.kinetic, 1e-8 * prob.lambda_disc);
  EXPECT_LE(r.F, r.F_bound + 1e-8 * prob.lambda_disc);
}

TEST(SolveRung, HorizonRuleEnforced) {
  const auto g = build_grid(1.0, 16);
  const auto spec = KernelSpec::pure(2.0, 0.5);
  const auto prob = make_problem(g, sample_datum(g, DatumShape::Bump, 0.0, 1.0), spec);
  auto opts = small_options();
  opts.T = 1.0;
  EXPECT_THROW(solve_rung(0.1, prob, spec, opts), ConfigError);
  opts.T = 1.84;
  EXPECT_NO_THROW(solve_rung(0.1, prob, spec, opts));
}

TEST(RunLadder, ConstantDatumIsFixed) {
  const auto g = build_grid(1.0, 16);
  const auto spec = KernelSpec::double_phase(2.0, 4.0, 0.5, 0.5, 1.0, 0.01);
  const auto prob = make_problem(g, std::vector<double>(g.size(), 0.7), spec);
  EXPECT_EQ(prob.lambda_disc, 0.0);
  auto opts = small_options();
  opts.K = 16;
  const auto rep = run_ladder(kLadder, prob, spec, opts);
  for (double v : rep.limit.data()) EXPECT_EQ(v, 0.7);
  for (const auto& r : rep.rungs) {
    EXPECT_EQ(r.diag.kinetic, 0.0);
    EXPECT_EQ(r.F, 0.0);
  }
}

TEST(RunLadder, ScheduleValidation) {
  const auto g = build_grid(1.0, 16);
  const auto spec = KernelSpec::pure(2.0, 0.5);
  const auto prob = make_problem(g, sample_datum(g, DatumShape::Bump, 0.0, 1.0), spec);
  const auto o = small_options();
  EXPECT_THROW(run_ladder({0.2, 0.1}, prob, spec, o), ConfigError);
  EXPECT_THROW(run_ladder({0.2, 0.2, 0.1}, prob, spec, o), ConfigError);
  EXPECT_THROW(run_ladder({0.1, 0.2, 0.05}, prob, spec, o), ConfigError);
}

TEST(SlabReport, ShortSlabsAreSkippedAndCounted) {
  const auto g = build_grid(1.0, 16);
  Trajectory u(g, 10, 1.0);
  const std::vector<double> E(11, 1.0);
  // eps = 0.35: slabs of length 0.1, 0.2, 0.3 are shorter than eps.
  const auto rep = slab_report(u, E, 1.0, 0.35, 0.05);
  EXPECT_GT(rep.skipped, 0u);
  EXPECT_GT(rep.checked, 0u);
  EXPECT_TRUE(rep.passed);
  EXPECT_NEAR(rep.worst_ratio, 1.0 / (2.0 * std::exp(1.0)), 1e-12);
  // A slab mean above 2 e lambda fails.
  const std::vector<double> big(11, 6.0);
  EXPECT_FALSE(slab_report(u, big, 1.0, 0.35, 0.05).passed);
}
