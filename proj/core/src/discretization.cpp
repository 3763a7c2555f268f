#include "nlevo/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nlevo/errors.hpp"
#include "nlevo/parallel.hpp"

namespace nlevo {

SpaceGrid build_grid(double R, std::size_t M) {
  std::vector<std::string> bad;
  if (M < 8) bad.push_back("M must be at least 8");
  if (!(R >= 1.0) || !std::isfinite(R)) bad.push_back("R must be at least 1");
  if (M > 1u << 20) bad.push_back("M is unreasonably large");
  if (!bad.empty()) throw ConfigError(std::move(bad));

  SpaceGrid g;
  g.R = R;
  g.dx = (1.0 + 2.0 * R) / static_cast<double>(M - 1);
  g.x.resize(M);
  g.omega.resize(M);
  for (std::size_t i = 0; i < M; ++i) {
    // Symmetric construction so the grid mirrors exactly about x = 1/2.
    g.x[i] = (i <= M / 2) ? -R + g.dx * static_cast<double>(i)
                          : 1.0 + R - g.dx * static_cast<double>(M - 1 - i);
    g.omega[i] = (g.x[i] > 0.0 && g.x[i] < 1.0) ? 1 : 0;
    if (g.omega[i]) g.omega_indices.push_back(static_cast<std::uint32_t>(i));
  }
  if (g.omega_indices.empty()) throw ConfigError("grid has no points inside (0, 1)");
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = i + 1; j < M; ++j)
      if (g.omega[i] || g.omega[j])
        g.pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                           g.x[j] - g.x[i]});
  return g;
}

Trajectory::Trajectory(const SpaceGrid& grid, std::size_t K, double T) {
  std::vector<std::string> bad;
  if (K < 2) bad.push_back("K must be at least 2");
  if (!(T > 0.0) || !std::isfinite(T)) bad.push_back("T must be positive");
  if (!bad.empty()) throw ConfigError(std::move(bad));
  K_ = K;
  M_ = grid.size();
  dt_ = T / static_cast<double>(K);
  values_.assign((K + 1) * M_, 0.0);
  exterior_.resize(M_);
  for (std::size_t i = 0; i < M_; ++i) exterior_[i] = grid.omega[i] ? 0 : 1;
  free_points_ = grid.omega_indices;
}

void Trajectory::fill_from_datum(std::span<const double> u0, bool everywhere) {
  if (u0.size() != M_) throw DomainError("datum size does not match the grid");
  for (std::size_t k = 0; k <= K_; ++k)
    for (std::size_t i = 0; i < M_; ++i)
      if (everywhere || frozen(k, i)) (*this)(k, i) = u0[i];
}

std::vector<double> Trajectory::free_values() const {
  std::vector<double> v;
  v.reserve(free_size());
  for (std::size_t k = 1; k <= K_; ++k)
    for (auto i : free_points_) v.push_back((*this)(k, i));
  return v;
}

void Trajectory::set_free_values(std::span<const double> v) {
  if (v.size() != free_size()) throw DomainError("free vector size mismatch");
  std::size_t n = 0;
  for (std::size_t k = 1; k <= K_; ++k)
    for (auto i : free_points_) (*this)(k, i) = v[n++];
}

double Trajectory::frozen_defect(std::span<const double> u0) const {
  double d = 0.0;
  for (std::size_t k = 0; k <= K_; ++k)
    for (std::size_t i = 0; i < M_; ++i)
      if (frozen(k, i)) d = std::max(d, std::abs((*this)(k, i) - u0[i]));
  return d;
}

std::string to_string(DatumShape d) {
  switch (d) {
    case DatumShape::Constant: return "constant";
    case DatumShape::Bump: return "bump";
    case DatumShape::Step: return "step";
    case DatumShape::Ramp: return "ramp";
  }
  return "?";
}

DatumShape datum_from_string(const std::string& name) {
  if (name == "constant") return DatumShape::Constant;
  if (name == "bump") return DatumShape::Bump;
  if (name == "step") return DatumShape::Step;
  if (name == "ramp") return DatumShape::Ramp;
  throw ConfigError("unknown datum shape '" + name + "' (constant, bump, step, ramp)");
}

std::vector<double> sample_datum(const SpaceGrid& grid, DatumShape shape, double exterior,
                                 double amplitude) {
  if (!std::isfinite(exterior) || !std::isfinite(amplitude))
    throw ConfigError("datum parameters must be finite");
  std::vector<double> u(grid.size(), exterior);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.x[i];
    switch (shape) {
      case DatumShape::Constant: break;
      case DatumShape::Bump:
        if (grid.in_omega(i)) u[i] += amplitude * std::sin(std::numbers::pi * x);
        break;
      case DatumShape::Step:
        if (grid.in_omega(i)) u[i] += amplitude;
        break;
      case DatumShape::Ramp: u[i] += amplitude * std::clamp(x, 0.0, 1.0); break;
    }
  }
  return u;
}

DiscreteEnergy::DiscreteEnergy(const KernelSpec& spec, const SpaceGrid& grid)
    : spec_(spec), grid_(&grid) {
  spec_.validate();
  factors_.reserve(grid.pairs.size());
  weights_.reserve(grid.pairs.size());
  const double dx2 = grid.dx * grid.dx;
  for (const auto& pr : grid.pairs) {
    factors_.push_back(pair_factors(spec_, grid.x[pr.i], grid.x[pr.j]));
    weights_.push_back(2.0 * dx2 / pr.distance);
  }
  for (auto i : grid.omega_indices) {
    left_dist_.push_back(grid.x[i] - grid.left_edge());
    right_dist_.push_back(grid.right_edge() - grid.x[i]);
  }
}

double DiscreteEnergy::pair_sum(std::span<const double> u) const {
  const auto& pairs = grid_->pairs;
  CompensatedSum sum;
  for (std::size_t n = 0; n < pairs.size(); ++n) {
    const double xi = u[pairs[n].i] - u[pairs[n].j];
    if (xi != 0.0) sum += weights_[n] * density_value(spec_, factors_[n], xi);
  }
  return sum.value();
}

double DiscreteEnergy::tail(std::span<const double> u) const {
  const auto& om = grid_->omega_indices;
  const double cl = u.front(), cr = u.back();
  CompensatedSum sum;
  for (std::size_t n = 0; n < om.size(); ++n) {
    const double ui = u[om[n]];
    sum += far_field(spec_, ui - cl, left_dist_[n]).value;
    sum += far_field(spec_, ui - cr, right_dist_[n]).value;
  }
  return 2.0 * grid_->dx * sum.value();
}

double DiscreteEnergy::operator()(std::span<const double> u) const {
  if (u.size() != grid_->size()) throw DomainError("slice size does not match the grid");
  const double e = pair_sum(u) + tail(u);
  if (!std::isfinite(e)) report_non_finite(u);
  return e;
}

void DiscreteEnergy::report_non_finite(std::span<const double> u) const {
  const auto& pairs = grid_->pairs;
  for (std::size_t n = 0; n < pairs.size(); ++n) {
    const double xi = u[pairs[n].i] - u[pairs[n].j];
    if (!std::isfinite(weights_[n] * density_value(spec_, factors_[n], xi)))
      throw NumericalError("non-finite energy at pair " + std::to_string(n) + " (" +
                           std::to_string(pairs[n].i) + ", " + std::to_string(pairs[n].j) + ")");
  }
  throw NumericalError("non-finite far-field energy");
}

double DiscreteEnergy::value_and_gradient(std::span<const double> u,
                                          std::span<double> grad) const {
  if (u.size() != grid_->size() || grad.size() != u.size())
    throw DomainError("slice size does not match the grid");
  std::fill(grad.begin(), grad.end(), 0.0);
  const auto& pairs = grid_->pairs;
  CompensatedSum sum;
  for (std::size_t n = 0; n < pairs.size(); ++n) {
    const double xi = u[pairs[n].i] - u[pairs[n].j];
    if (xi == 0.0) continue;
    const DensityValue h = density(spec_, factors_[n], xi);
    sum += weights_[n] * h.value;
    const double g = weights_[n] * h.derivative;
    grad[pairs[n].i] += g;
    grad[pairs[n].j] -= g;
  }
  const auto& om = grid_->omega_indices;
  const double cl = u.front(), cr = u.back();
  const double w = 2.0 * grid_->dx;
  double gl = 0.0, gr = 0.0;
  for (std::size_t n = 0; n < om.size(); ++n) {
    const double ui = u[om[n]];
    const DensityValue l = far_field(spec_, ui - cl, left_dist_[n]);
    const DensityValue r = far_field(spec_, ui - cr, right_dist_[n]);
    sum += w * (l.value + r.value);
    grad[om[n]] += w * (l.derivative + r.derivative);
    gl -= w * l.derivative;
    gr -= w * r.derivative;
  }
  // The far-field constants are read from the box ends.
  grad.front() += gl;
  grad.back() += gr;
  const double e = sum.value();
  if (!std::isfinite(e)) report_non_finite(u);
  return e;
}

double energy_slice(const KernelSpec& spec, const SpaceGrid& grid, std::span<const double> u) {
  return DiscreteEnergy(spec, grid)(u);
}

double tail_correction(const KernelSpec& spec, const SpaceGrid& grid, std::span<const double> u) {
  if (u.size() != grid.size()) throw DomainError("slice size does not match the grid");
  return DiscreteEnergy(spec, grid).tail(u);
}

DiscreteNorms discrete_norms(const SpaceGrid& grid, std::span<const double> u, double p,
                             double s) {
  if (u.size() != grid.size()) throw DomainError("slice size does not match the grid");
  if (!(p >= 1.0) || !(s > 0.0 && s < 1.0)) throw DomainError("need p >= 1 and 0 < s < 1");
  const double dx = grid.dx;
  CompensatedSum lp, semi;
  for (std::size_t i = 0; i < u.size(); ++i) lp += std::pow(std::abs(u[i]), p) * dx;
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = i + 1; j < u.size(); ++j) {
      const double d = grid.x[j] - grid.x[i];
      const double xi = std::abs(u[i] - u[j]);
      if (xi != 0.0) semi += 2.0 * std::pow(xi, p) / std::pow(d, 1.0 + s * p) * dx * dx;
    }
  DiscreteNorms out;
  out.lp_norm = std::pow(lp.value(), 1.0 / p);
  out.gagliardo_seminorm = std::pow(semi.value(), 1.0 / p);
  out.sobolev_norm = out.lp_norm + out.gagliardo_seminorm;
  return out;
}

namespace {

double lp_power_omega(const SpaceGrid& grid, std::span<const double> u, double p) {
  CompensatedSum s;
  for (auto i : grid.omega_indices) s += std::pow(std::abs(u[i]), p);
  return s.value() * grid.dx;
}

}  // namespace

PoincareEstimate estimate_poincare(const SpaceGrid& grid, double p, double s,
                                   std::size_t iterations) {
  std::vector<std::string> bad;
  if (!(p >= 2.0)) bad.push_back("Poincare estimate requires p >= 2");
  if (!(s > 0.0 && s < 1.0)) bad.push_back("s must lie in (0, 1)");
  if (iterations < 100) bad.push_back("Poincare estimate requires at least 100 iterations");
  if (!bad.empty()) throw ConfigError(std::move(bad));

  const DiscreteEnergy energy(KernelSpec::pure(p, s), grid);
  const std::size_t M = grid.size();
  std::vector<double> u(M, 0.0), trial(M, 0.0), gE(M), dir(M, 0.0);
  for (auto i : grid.omega_indices) u[i] = std::sin(std::numbers::pi * grid.x[i]);

  auto normalize = [&](std::vector<double>& v) {
    const double n = std::pow(lp_power_omega(grid, v, p), 1.0 / p);
    for (auto i : grid.omega_indices) v[i] /= n;
  };
  normalize(u);

  // On the unit sphere R(u) = E(u); the projected L^2 gradient is
  // (dE - R dN) / dx with N = ||u||_p^p.
  auto rayleigh_grad = [&](const std::vector<double>& v, std::vector<double>& g) {
    const double E = energy.value_and_gradient(v, gE);
    const double N = lp_power_omega(grid, v, p);
    const double R = E / N;
    std::fill(g.begin(), g.end(), 0.0);
    for (auto i : grid.omega_indices) {
      const double dN = p * std::pow(std::abs(v[i]), p - 1.0) * (v[i] < 0 ? -1.0 : 1.0) * grid.dx;
      g[i] = (gE[i] - R * dN) / (N * grid.dx);
    }
    return R;
  };

  PoincareEstimate out;
  std::vector<double> g(M), g_trial(M);
  double R = rayleigh_grad(u, g);
  double step = 1.0 / std::max(R, 1.0);
  int stalled = 0;
  for (std::size_t it = 0; it < iterations; ++it) {
    double gmax = 0.0;
    for (auto i : grid.omega_indices) gmax = std::max(gmax, std::abs(g[i]));
    out.iterations = it;
    if (gmax <= 1e-9 * R) {
      out.converged = true;
      break;
    }
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      trial = u;
      double gg = 0.0;
      for (auto i : grid.omega_indices) {
        trial[i] -= step * g[i];
        gg += g[i] * g[i];
      }
      normalize(trial);
      const double Rt = rayleigh_grad(trial, g_trial);
      if (Rt <= R - 1e-4 * step * gg * grid.dx) {
        // Decrease at the level of round-off: the quotient has settled.
        stalled = R - Rt <= 1e-14 * R ? stalled + 1 : 0;
        u.swap(trial);
        g.swap(g_trial);
        R = Rt;
        step *= 1.5;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (stalled >= 50) {
      out.converged = true;
      break;
    }
    if (!accepted) {
      // No further decrease is representable; treat as converged at round-off.
      out.converged = true;
      break;
    }
  }
  out.rayleigh = R;
  out.constant = 1.0 / R;
  out.eigenvector = u;
  return out;
}

ProblemData make_problem(SpaceGrid grid, std::vector<double> u0, const KernelSpec& spec) {
  if (u0.size() != grid.size()) throw ConfigError("datum size does not match the grid");
  for (double v : u0)
    if (!std::isfinite(v)) throw ConfigError("datum must be finite");
  ProblemData pd;
  pd.grid = std::move(grid);
  pd.u0 = std::move(u0);
  pd.lambda_disc = DiscreteEnergy(spec, pd.grid)(pd.u0);
  return pd;
}

double l2_omega(const SpaceGrid& grid, std::span<const double> u) {
  CompensatedSum s;
  for (auto i : grid.omega_indices) s += u[i] * u[i];
  return std::sqrt(s.value() * grid.dx);
}

double l2_space_time(const SpaceGrid& grid, const Trajectory& a, const Trajectory* b) {
  const std::size_t K = a.steps();
  if (b && (b->steps() != K || b->points() != a.points()))
    throw DomainError("trajectory shapes differ");
  CompensatedSum s;
  for (std::size_t k = 0; k <= K; ++k) {
    const double w = (k == 0 || k == K) ? 0.5 : 1.0;
    double acc = 0.0;
    for (auto i : grid.omega_indices) {
      const double d = a(k, i) - (b ? (*b)(k, i) : 0.0);
      acc += d * d;
    }
    s += w * acc;
  }
  return std::sqrt(s.value() * grid.dx * a.dt());
}

}  // namespace nlevo
