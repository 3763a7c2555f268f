#include "nlevo/wide_driver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numbers>

#include "nlevo/errors.hpp"

namespace nlevo {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

double resolve_horizon(const std::vector<double>& eps_schedule, const WideOptions& opts) {
  if (opts.T > 0.0) return opts.T;
  if (eps_schedule.empty()) throw ConfigError("epsilon schedule is empty");
  return kHorizonFactor * *std::max_element(eps_schedule.begin(), eps_schedule.end());
}

RungRecord solve_rung(double epsilon, const ProblemData& problem, const KernelSpec& spec,
                      const WideOptions& opts, const Trajectory* warm) {
  const double T = opts.T > 0.0 ? opts.T : kHorizonFactor * epsilon;
  if (T < kHorizonFactor * epsilon * (1.0 - 1e-12))
    throw ConfigError("horizon T=" + fmt(T) + " is shorter than 18.4 eps for eps=" + fmt(epsilon));
  const SpaceGrid& grid = problem.grid;

  Trajectory u(grid, opts.K, T);
  if (warm) {
    if (warm->steps() != u.steps() || warm->points() != u.points() ||
        std::abs(warm->dt() - u.dt()) > 1e-15 * u.dt())
      throw DomainError("warm start has a different shape");
    u = *warm;
    u.fill_from_datum(problem.u0);
  } else {
    u.fill_from_datum(problem.u0, true);
  }

  Trajectory work = u;
  std::vector<std::unique_ptr<DiscreteEnergy>> energies;
  std::vector<std::unique_ptr<RegularizedFunctional>> functionals;
  auto make_objective = [&](double mu) {
    KernelSpec s = spec;
    s.mu = mu;
    energies.push_back(std::make_unique<DiscreteEnergy>(s, grid));
    const double lam = (*energies.back())(problem.u0);
    functionals.push_back(std::make_unique<RegularizedFunctional>(
        make_params(epsilon, u, lam, mu), *energies.back()));
    const RegularizedFunctional* fn = functionals.back().get();
    Objective obj;
    obj.metric = fn->relative_metric(u);
    obj.value_grad = [fn, &work](std::span<const double> x, std::span<double> g) {
      work.set_free_values(x);
      return fn->value_and_gradient(work, g, true);
    };
    return obj;
  };

  ContinuationResult cr = continuation_in_mu(make_objective, u.free_values(), opts.solve, spec.mu);
  u.set_free_values(cr.final.x);

  RungRecord rec;
  rec.epsilon = epsilon;
  rec.mus = cr.mus;
  rec.solve = std::move(cr.final);
  rec.solve.x.clear();
  rec.solve.iterations = cr.total_iterations;

  // All checks use the kernel's own mu.
  const DiscreteEnergy energy(spec, grid);
  const double lambda = problem.lambda_disc;
  const RegularizedFunctional F(make_params(epsilon, u, lambda, spec.mu), energy);
  rec.diag = F.diagnostics(u);
  rec.lambda_disc = lambda;
  rec.F = rec.diag.F;
  rec.F_bound = -std::expm1(-T / epsilon) * lambda;
  const double tol = opts.tol;
  rec.minimality_margin = rec.F_bound + opts.min_bound_tol * lambda - rec.F;
  rec.kinetic_margin = 2.0 * lambda * (1.0 + tol) - rec.diag.weighted_kinetic;
  rec.potential_margin = epsilon * lambda * (1.0 + tol) - rec.diag.weighted_potential;
  rec.monotone_margin = rec.diag.monotone_margin + opts.mono_tol * lambda;
  rec.unweighted_kinetic_margin = lambda * (1.0 + tol) - rec.diag.kinetic;
  rec.slabs = slab_report(u, rec.diag.E, lambda, epsilon, tol);
  rec.holder = holder_report(grid, u, lambda, tol);

  auto require = [&](bool ok, const std::string& what) {
    if (!ok) {
      rec.valid = false;
      rec.failures.push_back(what);
    }
  };
  require(rec.solve.converged, "optimizer did not reach grad_tol (|g|=" + fmt(rec.solve.grad_norm) + ")");
  require(rec.minimality_margin >= 0.0, "F exceeds (1-e^{-T/eps}) lambda by " + fmt(-rec.minimality_margin));
  require(rec.kinetic_margin >= 0.0, "weighted kinetic bound violated");
  require(rec.potential_margin >= 0.0, "weighted potential bound violated");
  require(rec.monotone_margin >= 0.0, "e^{t/eps} I(t) increases by " + fmt(-rec.diag.monotone_margin));
  require(u.frozen_defect(problem.u0) == 0.0, "frozen entries changed");
  rec.u = std::move(u);
  return rec;
}

LadderReport run_ladder(const std::vector<double>& eps_schedule, const ProblemData& problem,
                        const KernelSpec& spec, const WideOptions& opts, const Trajectory* init) {
  std::vector<std::string> bad;
  if (eps_schedule.size() < 3) bad.push_back("epsilon schedule needs at least three rungs");
  for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
    if (!(eps_schedule[i] > 0.0)) bad.push_back("epsilon values must be positive");
    if (i > 0 && !(eps_schedule[i] < eps_schedule[i - 1]))
      bad.push_back("epsilon schedule must be strictly decreasing");
  }
  if (!bad.empty()) throw ConfigError(std::move(bad));

  WideOptions o = opts;
  o.T = resolve_horizon(eps_schedule, opts);
  LadderReport rep;
  rep.lambda_disc = problem.lambda_disc;
  for (double eps : eps_schedule) {
    const Trajectory* warm = rep.rungs.empty() ? init : &rep.rungs.back().u;
    RungRecord rec = solve_rung(eps, problem, spec, o, warm);
    if (!rep.rungs.empty()) {
      const double d = l2_space_time(problem.grid, rec.u, &rep.rungs.back().u);
      const double n = l2_space_time(problem.grid, rec.u);
      rep.cauchy_absolute.push_back(d);
      rep.cauchy.push_back(n > 0.0 ? d / n : d);
    }
    rep.valid = rep.valid && rec.valid;
    rep.rungs.push_back(std::move(rec));
  }
  rep.converged = rep.cauchy.back() <= opts.limit_tol;
  rep.limit = rep.rungs.back().u;

  const auto& g = problem.grid;
  std::vector<double> diff(g.size());
  for (std::size_t k = 1; k <= rep.limit.steps(); ++k) {
    for (std::size_t i = 0; i < g.size(); ++i) diff[i] = rep.limit(k, i) - problem.u0[i];
    const double d = l2_omega(g, diff);
    const double denom = 2.0 * rep.limit.time(k) * problem.lambda_disc;
    rep.initial_recovery_ratio =
        std::max(rep.initial_recovery_ratio, denom > 0.0 ? d * d / denom : (d > 0.0 ? INFINITY : 0.0));
  }
  return rep;
}

HolderReport holder_report(const SpaceGrid& grid, const Trajectory& u, double lambda_disc,
                           double tol) {
  HolderReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  const std::size_t K = u.steps();
  std::vector<double> diff(grid.size());
  for (std::size_t k = 0; k <= K; ++k)
    for (std::size_t l = k + 1; l <= K; ++l) {
      for (std::size_t i = 0; i < grid.size(); ++i) diff[i] = u(l, i) - u(k, i);
      const double n = l2_omega(grid, diff);
      const double dt = u.time(l) - u.time(k);
      const double bound = lambda_disc * dt;
      const double margin = bound * (1.0 + tol) - n * n;
      const double ratio = bound > 0.0 ? n * n / bound : (n > 0.0 ? INFINITY : 0.0);
      ++rep.pairs;
      if (margin < rep.worst_margin) {
        rep.worst_margin = margin;
        rep.worst_k = k;
        rep.worst_l = l;
      }
      rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    }
  if (rep.pairs == 0) rep.worst_margin = 0.0;
  rep.passed = rep.worst_margin >= 0.0;
  return rep;
}

SlabReport slab_report(const Trajectory& u, std::span<const double> E, double lambda_disc,
                       double epsilon, double tol) {
  SlabReport rep;
  const std::size_t K = u.steps();
  if (E.size() != K + 1) throw DomainError("slice energy table has the wrong length");
  // Prefix trapezoid integrals of the piecewise linear energy.
  std::vector<double> P(K + 1, 0.0);
  for (std::size_t k = 0; k < K; ++k) P[k + 1] = P[k] + 0.5 * u.dt() * (E[k] + E[k + 1]);
  const double bound = 2.0 * std::numbers::e * lambda_disc;
  for (std::size_t a = 0; a <= K; ++a)
    for (std::size_t b = a + 1; b <= K; ++b) {
      const double len = u.time(b) - u.time(a);
      if (len < epsilon * (1.0 - 1e-12)) {
        ++rep.skipped;
        continue;
      }
      ++rep.checked;
      const double mean = (P[b] - P[a]) / len;
      const double ratio = bound > 0.0 ? mean / bound : (mean > 0.0 ? INFINITY : 0.0);
      rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    }
  rep.passed = rep.worst_ratio <= 1.0 + tol;
  return rep;
}

CoercivityReport coercivity_report(const ProblemData& problem, const KernelSpec& spec,
                                   const Trajectory& u, double poincare_constant) {
  const SpaceGrid& g = problem.grid;
  const double p = spec.p;
  const DiscreteEnergy energy(spec, g);
  const DiscreteEnergy pure(KernelSpec::pure(p, spec.s), g);
  CoercivityReport rep;
  rep.poincare_constant = poincare_constant;
  const double cp = std::pow(poincare_constant, 1.0 / p) + 1.0;
  const double k3 = std::pow(3.0, p - 1.0);
  const DiscreteNorms n0 = discrete_norms(g, problem.u0, p, spec.s);
  const double S0p = std::pow(n0.sobolev_norm, p);
  const double N0p = pure(problem.u0);
  rep.C1 = k3 * std::pow(cp, p) / spec.A_lower;
  rep.C2 = S0p > 0.0 ? k3 * (std::pow(cp, p) * N0p / S0p + 1.0) : k3;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= u.steps(); ++k) {
    const auto slice = u.slice(k);
    const double Sp = std::pow(discrete_norms(g, slice, p, spec.s).sobolev_norm, p);
    const double rhs = rep.C1 * energy(slice) + (S0p > 0.0 ? rep.C2 * S0p : k3 * N0p);
    rep.worst_margin = std::min(rep.worst_margin, rhs - Sp);
  }
  rep.passed = rep.worst_margin >= 0.0;
  return rep;
}

}  // namespace nlevo
