#include "nlevo/mollifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "nlevo/errors.hpp"
#include "nlevo/parallel.hpp"

namespace nlevo {

namespace {

std::span<const double> initial_slice(const Trajectory& v, const MollifierParams& params) {
  if (params.v0.empty()) return v.slice(0);
  if (params.v0.size() != v.points()) throw DomainError("v0 size does not match the trajectory");
  return params.v0;
}

void check_h(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("mollification scale h must be positive");
}

double slope_fit(const std::vector<double>& h, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(y[i] > 0.0)) continue;
    const double lx = std::log(h[i]), ly = std::log(y[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    ++n;
  }
  if (n < 2) return 0.0;
  const double d = static_cast<double>(n) * sxx - sx * sx;
  return d != 0.0 ? (static_cast<double>(n) * sxy - sx * sy) / d : 0.0;
}

}  // namespace

Trajectory mollify(const Trajectory& v, const MollifierParams& params) {
  check_h(params.h);
  const auto v0 = initial_slice(v, params);
  for (double x : v.data())
    if (!std::isfinite(x)) throw DomainError("trajectory is not finite");
  Trajectory m = v;
  const double decay = std::exp(-v.dt() / params.h);
  const std::size_t M = v.points();
  std::copy(v0.begin(), v0.end(), m.slice(0).begin());
  for (std::size_t k = 0; k < v.steps(); ++k)
    for (std::size_t i = 0; i < M; ++i) {
      const double target = v(k + 1, i);
      m(k + 1, i) = target + decay * (m(k, i) - target);
    }
  return m;
}

double mollify_derivative_check(const Trajectory& v, const Trajectory& m,
                                const MollifierParams& params) {
  check_h(params.h);
  // int_{t_k}^{t_{k+1}} ([v]_h - v) dt = h (1 - e^{-dt/h}) ([v]_h(t_k) - v_{k+1})
  const double one_minus = -std::expm1(-v.dt() / params.h);
  double worst = 0.0;
  for (std::size_t k = 0; k < v.steps(); ++k)
    for (std::size_t i = 0; i < v.points(); ++i) {
      const double lhs = m(k + 1, i) - m(k, i);
      const double rhs = -one_minus * (m(k, i) - v(k + 1, i));
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  return worst;
}

double lp_space_time(const SpaceGrid& grid, const Trajectory& f, double p, const Trajectory* g) {
  CompensatedSum s;
  for (std::size_t k = 1; k <= f.steps(); ++k)
    for (auto i : grid.omega_indices) {
      const double d = f(k, i) - (g ? (*g)(k, i) : 0.0);
      s += std::pow(std::abs(d), p);
    }
  return std::pow(s.value() * grid.dx * f.dt(), 1.0 / p);
}

double lp_omega(const SpaceGrid& grid, std::span<const double> v, double p) {
  CompensatedSum s;
  for (auto i : grid.omega_indices) s += std::pow(std::abs(v[i]), p);
  return std::pow(s.value() * grid.dx, 1.0 / p);
}

double energy_integral(const DiscreteEnergy& energy, const Trajectory& v) {
  std::vector<double> E(v.steps());
  parallel_for(E.size(), [&](std::size_t k) { E[k] = energy(v.slice(k + 1)); });
  return compensated_sum(E) * v.dt();
}

double jensen_margin(const DiscreteEnergy& energy, const Trajectory& v, const Trajectory& m,
                     const MollifierParams& params, std::size_t max_pairs) {
  check_h(params.h);
  const auto& spec = energy.spec();
  const auto& g = energy.grid();
  const auto v0 = initial_slice(v, params);
  const double decay = std::exp(-v.dt() / params.h);
  const std::size_t stride = std::max<std::size_t>(1, g.pairs.size() / std::max<std::size_t>(1, max_pairs));
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < g.pairs.size(); n += stride) {
    const auto& pr = g.pairs[n];
    const PairFactors f = pair_factors(spec, g.x[pr.i], g.x[pr.j]);
    const double H0 = density_value(spec, f, v0[pr.i] - v0[pr.j]);
    double mh = 0.0;  // [H(xi)]_h with zero initial value
    double tail = H0;  // e^{-t_k/h} H(xi_0)
    for (std::size_t k = 1; k <= v.steps(); ++k) {
      const double Hk = density_value(spec, f, v(k, pr.i) - v(k, pr.j));
      mh = Hk + decay * (mh - Hk);
      tail *= decay;
      const double Hm = density_value(spec, f, m(k, pr.i) - m(k, pr.j));
      const double scale = 1.0 + std::abs(mh) + std::abs(tail);
      worst = std::min(worst, (mh + tail - Hm) / scale);
    }
  }
  return worst;
}

MollifierTable mollifier_convergence(const Trajectory& v, std::span<const double> h_schedule,
                                     const DiscreteEnergy& energy, double p) {
  if (h_schedule.empty()) throw DomainError("h schedule is empty");
  for (std::size_t i = 0; i < h_schedule.size(); ++i) {
    check_h(h_schedule[i]);
    if (i > 0 && !(h_schedule[i] < h_schedule[i - 1]))
      throw DomainError("h schedule must be strictly decreasing");
  }
  const auto& g = energy.grid();
  MollifierTable t;
  t.v_scale = lp_space_time(g, v, p);
  const double v0_norm = lp_omega(g, v.slice(0), p);
  const double Ev = energy_integral(energy, v);
  std::vector<double> hs, l2, en;
  for (double h : h_schedule) {
    const MollifierParams mp{h, {}};
    const Trajectory m = mollify(v, mp);
    MollifierRow r;
    r.h = h;
    r.lp_gap = lp_space_time(g, m, p, &v);
    r.l2_gap = lp_space_time(g, m, 2.0, &v);
    r.energy_gap = std::abs(energy_integral(energy, m) - Ev);
    r.bound_margin = t.v_scale + std::pow(h, 1.0 / p) * v0_norm - lp_space_time(g, m, p);
    r.residual = mollify_derivative_check(v, m, mp);
    r.jensen_margin = jensen_margin(energy, v, m, mp);
    if (!t.rows.empty()) {
      t.gaps_decreasing = t.gaps_decreasing && r.lp_gap <= t.rows.back().lp_gap + 1e-12 &&
                          r.l2_gap <= t.rows.back().l2_gap + 1e-12;
      t.energy_decreasing = t.energy_decreasing && r.energy_gap <= t.rows.back().energy_gap + 1e-12;
    }
    hs.push_back(h);
    l2.push_back(r.l2_gap);
    en.push_back(r.energy_gap);
    t.rows.push_back(r);
  }
  t.l2_slope = slope_fit(hs, l2);
  t.energy_slope = slope_fit(hs, en);
  t.final_gap_small = t.rows.back().lp_gap <= 10.0 * (h_schedule.back() / v.horizon()) * t.v_scale;
  return t;
}

Trajectory smooth_demo_trajectory(const SpaceGrid& grid, std::span<const double> u0,
                                  std::size_t K, double T) {
  Trajectory v(grid, K, T);
  v.fill_from_datum(u0, true);
  for (std::size_t k = 1; k <= K; ++k) {
    const double a = std::sin(2.0 * v.time(k) / T);
    for (auto i : grid.omega_indices) v(k, i) = u0[i] + a * std::sin(std::numbers::pi * grid.x[i]);
  }
  return v;
}

}  // namespace nlevo
