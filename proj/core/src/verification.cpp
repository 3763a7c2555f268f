#include "nlevo/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "nlevo/errors.hpp"
#include "nlevo/mollifier.hpp"
#include "nlevo/parallel.hpp"
#include "nlevo/regularized_functional.hpp"

namespace nlevo {

namespace {

// Portable draws from the raw engine output.
double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

double inner_omega(const SpaceGrid& g, std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (auto i : g.omega_indices) acc += a[i] * b[i];
  return acc * g.dx;
}

void require_same_shape(const Trajectory& a, const Trajectory& b) {
  if (a.steps() != b.steps() || a.points() != b.points())
    throw DomainError("trajectories have different shapes");
}

double half_sq_dist(const SpaceGrid& g, std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (auto i : g.omega_indices) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return 0.5 * acc * g.dx;
}

}  // namespace

double trapezoid_energy(const DiscreteEnergy& energy, const Trajectory& u) {
  const std::size_t K = u.steps();
  std::vector<double> E(K + 1);
  parallel_for(K + 1, [&](std::size_t k) {
    E[k] = energy(u.slice(k)) * ((k == 0 || k == K) ? 0.5 : 1.0);
  });
  return compensated_sum(E) * u.dt();
}

double check_variational_inequality(const Trajectory& u, const Trajectory& v,
                                    const ProblemData& problem, const DiscreteEnergy& energy) {
  require_same_shape(u, v);
  const auto& g = problem.grid;
  CompensatedSum time_term;
  std::vector<double> dv(g.size()), avg(g.size());
  for (std::size_t k = 0; k < u.steps(); ++k) {
    for (auto i : g.omega_indices) {
      dv[i] = v(k + 1, i) - v(k, i);
      avg[i] = 0.5 * ((v(k, i) - u(k, i)) + (v(k + 1, i) - u(k + 1, i)));
    }
    time_term += inner_omega(g, dv, avg);
  }
  const std::size_t K = u.steps();
  const double rhs = trapezoid_energy(energy, v) + time_term.value() +
                     half_sq_dist(g, v.slice(0), problem.u0) - half_sq_dist(g, v.slice(K), u.slice(K));
  return rhs - trapezoid_energy(energy, u);
}

double check_parabolic_minimizer(const Trajectory& u, const Trajectory& phi,
                                 const ProblemData& problem, const DiscreteEnergy& energy) {
  require_same_shape(u, phi);
  const auto& g = problem.grid;
  const std::size_t K = u.steps();
  Trajectory w = u;
  for (std::size_t k = 0; k <= K; ++k)
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (phi(k, i) != 0.0 && (k == 0 || k == K || !g.in_omega(i)))
        throw DomainError("test trajectory must vanish at t = 0, t = T and outside Omega");
      w(k, i) += phi(k, i);
    }
  // int u d_t phi for piecewise linear u and phi
  CompensatedSum coupling;
  std::vector<double> avg(g.size()), dphi(g.size());
  for (std::size_t k = 0; k < K; ++k) {
    for (auto i : g.omega_indices) {
      avg[i] = 0.5 * (u(k, i) + u(k + 1, i));
      dphi[i] = phi(k + 1, i) - phi(k, i);
    }
    coupling += inner_omega(g, avg, dphi);
  }
  return trapezoid_energy(energy, w) - trapezoid_energy(energy, u) - coupling.value();
}

double first_variation_limit(const Trajectory& u, const Trajectory& phi,
                             const ProblemData& problem, const DiscreteEnergy& energy) {
  auto ratio = [&](double s) {
    Trajectory sp = phi;
    for (double& x : sp.data()) x *= s;
    return check_parabolic_minimizer(u, sp, problem, energy) / s;
  };
  // r(s) = L + c s + O(s^2). The largest step only guards against a
  // non-convergent sequence: both extrapolants must agree in sign.
  const double r1 = ratio(1e-1), r2 = ratio(1e-2), r3 = ratio(1e-3);
  const double fine = (10.0 * r3 - r2) / 9.0;
  const double coarse = (10.0 * r2 - r1) / 9.0;
  return std::min(fine, coarse);
}

std::vector<ComparisonMap> comparison_battery(const Trajectory& u, const ProblemData& problem,
                                              std::size_t count, std::uint64_t seed) {
  if (count < 4) throw ConfigError("comparison battery needs at least 4 maps");
  const auto& g = problem.grid;
  const double T = u.horizon();
  std::mt19937_64 rng(seed);
  std::vector<ComparisonMap> out;
  out.push_back({u, "identity", 0.0});
  Trajectory U = u;
  U.fill_from_datum(problem.u0, true);
  out.push_back({U, "stationary", 0.0});
  const double hs[] = {0.02, 0.05, 0.1};
  std::vector<Trajectory> moll;
  for (double hf : hs) moll.push_back(mollify(u, {hf * T, problem.u0}));
  out.push_back({moll[0], "mollified", 0.0});

  const double sigmas[] = {0.1, 0.5, 1.0};
  for (std::size_t n = 3; n < count; ++n) {
    const double sigma = sigmas[n % 3] * (uniform(rng) < 0.5 ? -1.0 : 1.0);
    const double j = static_cast<double>(1 + pick(rng, 4));
    const double phase = uniform(rng);
    const bool from_moll = (n % 4 == 0);
    ComparisonMap cm{from_moll ? moll[pick(rng, moll.size())] : u,
                     from_moll ? "mollified+bump" : "bump", sigma};
    for (std::size_t k = 0; k <= u.steps(); ++k) {
      const double t = u.time(k) / T;
      const double ramp = 0.5 * (1.0 - std::cos(std::numbers::pi * (t + phase * t * (1.0 - t))));
      for (auto i : g.omega_indices)
        cm.v(k, i) += sigma * std::sin(j * std::numbers::pi * g.x[i]) * ramp;
    }
    out.push_back(std::move(cm));
  }
  return out;
}

std::vector<ComparisonMap> test_function_battery(const Trajectory& u, const ProblemData& problem,
                                                 std::size_t count, std::uint64_t seed) {
  const auto& g = problem.grid;
  const std::size_t K = u.steps();
  if (K < 4) throw ConfigError("test functions need at least 4 time steps");
  std::mt19937_64 rng(seed);
  const double amps[] = {0.1, 1.0};
  std::vector<ComparisonMap> out;
  for (std::size_t n = 0; n < count; ++n) {
    const double sigma = amps[n % 2] * ((n / 2) % 2 == 0 ? 1.0 : -1.0);
    const double j = static_cast<double>(1 + pick(rng, 4));
    // Support [ka, kb] with 1 <= ka < kb <= K - 1 and at least two steps.
    const std::size_t ka = 1 + pick(rng, K / 2);
    const std::size_t kb = std::min(K - 1, ka + 2 + pick(rng, K - ka - 2 + 1));
    ComparisonMap cm{u, "bump", sigma};
    for (double& x : cm.v.data()) x = 0.0;
    for (std::size_t k = ka; k <= kb; ++k) {
      const double b = std::sin(std::numbers::pi * static_cast<double>(k - ka) /
                                static_cast<double>(kb - ka));
      for (auto i : g.omega_indices)
        cm.v(k, i) = sigma * b * b * std::sin(j * std::numbers::pi * g.x[i]);
    }
    out.push_back(std::move(cm));
  }
  return out;
}

double default_violation_tol(double lambda_disc) { return 0.02 * (1.0 + lambda_disc); }

namespace {

BatteryReport finish(BatteryReport rep) {
  rep.worst = rep.margins.empty() ? 0.0 : *std::min_element(rep.margins.begin(), rep.margins.end());
  rep.passed = rep.worst >= -rep.tol;
  return rep;
}

}  // namespace

BatteryReport variational_battery(const Trajectory& u, const ProblemData& problem,
                                  const DiscreteEnergy& energy, std::size_t count,
                                  std::uint64_t seed, double tol) {
  BatteryReport rep;
  rep.tol = tol;
  for (auto& cm : comparison_battery(u, problem, count, seed)) {
    rep.labels.push_back(cm.family + ":" + std::to_string(cm.amplitude));
    rep.margins.push_back(check_variational_inequality(u, cm.v, problem, energy));
  }
  return finish(std::move(rep));
}

BatteryReport parabolic_battery(const Trajectory& u, const ProblemData& problem,
                                const DiscreteEnergy& energy, std::size_t count,
                                std::uint64_t seed, double tol) {
  BatteryReport rep;
  rep.tol = tol;
  for (auto& cm : test_function_battery(u, problem, count, seed)) {
    rep.labels.push_back(cm.family + ":" + std::to_string(cm.amplitude));
    rep.margins.push_back(check_parabolic_minimizer(u, cm.v, problem, energy));
  }
  return finish(std::move(rep));
}

Trajectory corrupt(const Trajectory& u, const SpaceGrid& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Trajectory c = u;
  const std::size_t k = 1 + u.steps() / 2;
  double amp = 1.0;
  for (double v : u.data()) amp = std::max(amp, 1.0 + std::abs(v));
  for (auto i : grid.omega_indices) c(k, i) = amp * (2.0 * uniform(rng) - 1.0);
  return c;
}

UniquenessReport check_uniqueness(const ProblemData& problem, const KernelSpec& spec,
                                  const std::vector<double>& eps_schedule,
                                  const WideOptions& opts, std::uint64_t seed) {
  WideOptions o = opts;
  o.T = resolve_horizon(eps_schedule, opts);
  const auto& g = problem.grid;
  std::mt19937_64 rng(seed);
  double scale = 0.0;
  for (double x : problem.u0) scale = std::max(scale, std::abs(x));
  scale = std::max(scale, 1.0);

  std::vector<Trajectory> limits;
  limits.push_back(run_ladder(eps_schedule, problem, spec, o).limit);
  for (int r = 0; r < 2; ++r) {
    Trajectory init(g, o.K, o.T);
    init.fill_from_datum(problem.u0, true);
    for (std::size_t k = 1; k <= init.steps(); ++k)
      for (auto i : g.omega_indices) init(k, i) += scale * (2.0 * uniform(rng) - 1.0);
    limits.push_back(run_ladder(eps_schedule, problem, spec, o, &init).limit);
  }
  UniquenessReport rep;
  rep.tol = 1e-4 * (1.0 + l2_omega(g, problem.u0));
  for (std::size_t a = 0; a < limits.size(); ++a)
    for (std::size_t b = a + 1; b < limits.size(); ++b)
      rep.gaps.push_back(l2_space_time(g, limits[a], &limits[b]));
  rep.max_gap = *std::max_element(rep.gaps.begin(), rep.gaps.end());
  rep.passed = rep.max_gap <= rep.tol;
  return rep;
}

EulerResult implicit_euler_solve(const ProblemData& problem, const KernelSpec& spec,
                                 std::size_t K, double T, const SolveOptions& opts) {
  if (spec.variant != Variant::PurePhase)
    throw ConfigError("implicit Euler comparison requires the pure-phase density");
  const auto& g = problem.grid;
  const DiscreteEnergy energy(spec, g);
  EulerResult res;
  res.u = Trajectory(g, K, T);
  res.u.fill_from_datum(problem.u0, true);
  const double dt = res.u.dt();
  const auto& om = g.omega_indices;
  std::vector<double> w(problem.u0), grad(g.size()), prev(g.size());
  res.energies.push_back(energy(problem.u0));

  for (std::size_t k = 0; k < K; ++k) {
    const auto uk = res.u.slice(k);
    std::copy(uk.begin(), uk.end(), prev.begin());
    Objective obj;
    obj.metric.assign(om.size(), 1.0);
    // Metric gradient: (w - u^k)/dt + dE/dw / dx.
    obj.value_grad = [&](std::span<const double> x, std::span<double> gr) {
      for (std::size_t n = 0; n < om.size(); ++n) w[om[n]] = x[n];
      const double E = energy.value_and_gradient(w, grad);
      double kin = 0.0;
      for (std::size_t n = 0; n < om.size(); ++n) {
        const double d = x[n] - prev[om[n]];
        kin += d * d;
        gr[n] = d / dt + grad[om[n]] / g.dx;
      }
      return 0.5 * kin * g.dx / dt + E;
    };
    std::vector<double> x0(om.size());
    for (std::size_t n = 0; n < om.size(); ++n) x0[n] = prev[om[n]];
    SolveOptions so = opts;
    so.mu_schedule.clear();
    so.initial_step = std::min(opts.initial_step, dt);
    SolveResult r = minimize(obj, std::move(x0), so);
    if (!r.converged && !r.stalled)
      throw NumericalError("implicit Euler step " + std::to_string(k) + " did not converge");
    res.converged = res.converged && r.converged;
    auto next = res.u.slice(k + 1);
    for (std::size_t n = 0; n < om.size(); ++n) next[om[n]] = r.x[n];
    res.residuals.push_back(r.grad_norm);
    res.energies.push_back(energy(next));
    if (res.energies.back() > res.energies[k] * (1.0 + 1e-12) + 1e-300) res.dissipative = false;
  }
  return res;
}

HeatSystem assemble_heat_system(const SpaceGrid& grid, std::span<const double> u0, double s) {
  // E(u) = sum_{pairs} 2 c_ij (u_i - u_j)^2 + sum_{i, side} 2 dx d^{-2s}/(2s) (u_i - c_side)^2
  // with c_ij = dx^2 / |x_i - x_j|^{1 + 2s}; the L^2(Omega) gradient is (A u - b).
  const auto& om = grid.omega_indices;
  const std::size_t n = om.size(), M = grid.size();
  const double dx = grid.dx;
  HeatSystem hs;
  hs.A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  hs.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  std::vector<long> slot(M, -1);
  for (std::size_t a = 0; a < n; ++a) slot[om[a]] = static_cast<long>(a);
  const double cl = u0.front(), cr = u0.back();
  for (std::size_t a = 0; a < n; ++a) {
    const std::size_t i = om[a];
    const auto ia = static_cast<Eigen::Index>(a);
    for (std::size_t j = 0; j < M; ++j) {
      if (j == i) continue;
      const double c = dx * dx / std::pow(std::abs(grid.x[i] - grid.x[j]), 1.0 + 2.0 * s);
      hs.A(ia, ia) += 4.0 * c / dx;
      if (slot[j] >= 0) {
        hs.A(ia, slot[j]) -= 4.0 * c / dx;
      } else {
        hs.b(ia) += 4.0 * c * u0[j] / dx;
      }
    }
    const double dl = grid.x[i] - (grid.x.front() - 0.5 * dx);
    const double dr = (grid.x.back() + 0.5 * dx) - grid.x[i];
    const double tl = 4.0 * dx * std::pow(dl, -2.0 * s) / (2.0 * s) / dx;
    const double tr = 4.0 * dx * std::pow(dr, -2.0 * s) / (2.0 * s) / dx;
    hs.A(ia, ia) += tl + tr;
    hs.b(ia) += tl * cl + tr * cr;
  }
  return hs;
}

namespace {

void require_heat(const KernelSpec& spec) {
  if (spec.variant != Variant::PurePhase || spec.p != 2.0)
    throw ConfigError("the spectral oracle requires the pure-phase density with p = 2");
}

}  // namespace

std::vector<double> stationary_p2(const ProblemData& problem, const KernelSpec& spec) {
  require_heat(spec);
  const HeatSystem hs = assemble_heat_system(problem.grid, problem.u0, spec.s);
  const Eigen::VectorXd us = hs.A.ldlt().solve(hs.b);
  std::vector<double> out(problem.u0);
  const auto& om = problem.grid.omega_indices;
  for (std::size_t a = 0; a < om.size(); ++a) out[om[a]] = us(static_cast<Eigen::Index>(a));
  return out;
}

Trajectory spectral_oracle_p2(const ProblemData& problem, const KernelSpec& spec, std::size_t K,
                              double T) {
  require_heat(spec);
  const auto& g = problem.grid;
  const auto& om = g.omega_indices;
  const HeatSystem hs = assemble_heat_system(g, problem.u0, spec.s);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hs.A);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolve failed");
  const Eigen::VectorXd lam = es.eigenvalues();
  const Eigen::MatrixXd& V = es.eigenvectors();
  const Eigen::VectorXd ustar = V * (V.transpose() * hs.b).cwiseQuotient(lam);
  Eigen::VectorXd init(static_cast<Eigen::Index>(om.size()));
  for (std::size_t a = 0; a < om.size(); ++a) init(static_cast<Eigen::Index>(a)) = problem.u0[om[a]];
  const Eigen::VectorXd coef = V.transpose() * (init - ustar);

  Trajectory out(g, K, T);
  out.fill_from_datum(problem.u0, true);
  for (std::size_t k = 1; k <= K; ++k) {
    const double t = out.time(k);
    const Eigen::VectorXd uk = ustar + V * (coef.array() * (-lam.array() * t).exp()).matrix();
    for (std::size_t a = 0; a < om.size(); ++a) out(k, om[a]) = uk(static_cast<Eigen::Index>(a));
  }
  return out;
}

double relative_l2(const SpaceGrid& grid, const Trajectory& a, const Trajectory& ref) {
  require_same_shape(a, ref);
  const double n = l2_space_time(grid, ref);
  const double d = l2_space_time(grid, a, &ref);
  return n > 0.0 ? d / n : d;
}

WeakComparison compare_weak(const SpaceGrid& grid, const Trajectory& wide, const Trajectory& euler,
                            const Trajectory* spectral) {
  WeakComparison c;
  c.wide_vs_euler = relative_l2(grid, wide, euler);
  if (spectral) {
    c.wide_vs_spectral = relative_l2(grid, wide, *spectral);
    c.euler_vs_spectral = relative_l2(grid, euler, *spectral);
  }
  return c;
}

double gradient_check(const KernelSpec& spec, std::uint64_t seed) {
  const SpaceGrid g = build_grid(1.0, 8);
  std::mt19937_64 rng(seed);
  std::vector<double> u0(g.size());
  const double c = 2.0 * uniform(rng) - 1.0;
  for (std::size_t i = 0; i < g.size(); ++i) u0[i] = g.in_omega(i) ? 2.0 * uniform(rng) - 1.0 : c;
  const DiscreteEnergy energy(spec, g);
  Trajectory u(g, 3, 1.5);
  u.fill_from_datum(u0, true);
  for (std::size_t k = 1; k <= 3; ++k)
    for (auto i : g.omega_indices) u(k, i) = 2.0 * uniform(rng) - 1.0;
  const RegularizedFunctional F(make_params(0.7, u, energy(u0), spec.mu), energy);
  std::vector<double> grad(u.free_size());
  F.value_and_gradient(u, grad, false);
  std::vector<double> x = u.free_values();
  double scale = 0.0;
  for (double v : grad) scale = std::max(scale, std::abs(v));
  double worst = 0.0;
  const double h = 1e-6;
  Trajectory w = u;
  for (std::size_t n = 0; n < x.size(); ++n) {
    std::vector<double> xp = x, xm = x;
    xp[n] += h;
    xm[n] -= h;
    w.set_free_values(xp);
    const double fp = F.value(w);
    w.set_free_values(xm);
    const double fm = F.value(w);
    const double fd = (fp - fm) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - grad[n]) / std::max(std::abs(fd), 1e-3 * scale));
  }
  return worst;
}

}  // namespace nlevo
