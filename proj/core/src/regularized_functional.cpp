#include "nlevo/regularized_functional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlevo/errors.hpp"
#include "nlevo/parallel.hpp"

namespace nlevo {

std::vector<double> FunctionalParams::weights() const {
  std::vector<double> w(K);
  for (std::size_t k = 0; k < K; ++k)
    w[k] = std::exp(-dt * static_cast<double>(k) / epsilon) * w_hat;
  return w;
}

double FunctionalParams::weight_total() const {
  return -epsilon * std::expm1(-horizon() / epsilon);
}

FunctionalParams make_params(double epsilon, const Trajectory& traj, double lambda_disc,
                             double mu) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw ConfigError("epsilon must be positive");
  FunctionalParams fp;
  fp.epsilon = epsilon;
  fp.dt = traj.dt();
  fp.K = traj.steps();
  fp.lambda_disc = lambda_disc;
  fp.mu = mu;
  const double r = fp.dt / epsilon;
  fp.decay = std::exp(-r);
  fp.w_hat = -epsilon * std::expm1(-r);
  // eps (1 - e^{-r}(1 + r)) / r, evaluated by series when r is small.
  if (r < 1e-3) {
    fp.b_hat = epsilon * r * (0.5 - r / 3.0 + r * r / 8.0);
  } else {
    fp.b_hat = epsilon * (-std::expm1(-r) - r * std::exp(-r)) / r;
  }
  fp.a_hat = fp.w_hat - fp.b_hat;
  return fp;
}

RegularizedFunctional::RegularizedFunctional(FunctionalParams params,
                                             const DiscreteEnergy& energy)
    : params_(params), energy_(&energy) {}

std::vector<double> RegularizedFunctional::slice_energies(const Trajectory& u) const {
  std::vector<double> E(u.steps() + 1);
  parallel_for(E.size(), [&](std::size_t k) { E[k] = (*energy_)(u.slice(k)); });
  return E;
}

namespace {

// 1/2 sum_{i in Omega} ((u_{k+1} - u_k)/dt)^2 dx
double kinetic_slice(const Trajectory& u, const SpaceGrid& g, std::size_t k) {
  double acc = 0.0;
  for (auto i : g.omega_indices) {
    const double d = (u(k + 1, i) - u(k, i)) / u.dt();
    acc += d * d;
  }
  return 0.5 * acc * g.dx;
}

// sum_k c^k x_k accumulated from the back so every term keeps full precision.
double geometric_sum(std::span<const double> x, double c) {
  double acc = 0.0;
  for (std::size_t k = x.size(); k-- > 0;) acc = x[k] + c * acc;
  return acc;
}

}  // namespace

double RegularizedFunctional::value(const Trajectory& u) const {
  const auto& g = energy_->grid();
  const auto& fp = params_;
  const std::vector<double> E = slice_energies(u);
  std::vector<double> term(fp.K);
  for (std::size_t k = 0; k < fp.K; ++k)
    term[k] = fp.w_hat * kinetic_slice(u, g, k) + (fp.a_hat * E[k] + fp.b_hat * E[k + 1]) / fp.epsilon;
  const double F = geometric_sum(term, fp.decay);
  if (!std::isfinite(F)) throw NumericalError("non-finite functional value");
  return F;
}

double RegularizedFunctional::value_and_gradient(const Trajectory& u, std::span<double> grad,
                                                 bool scaled) const {
  const auto& g = energy_->grid();
  const auto& fp = params_;
  const std::size_t K = fp.K, M = g.size();
  const auto& om = g.omega_indices;
  if (grad.size() != K * om.size()) throw DomainError("gradient size mismatch");

  std::vector<double> E(K + 1);
  std::vector<double> dE((K + 1) * M);
  parallel_for(K + 1, [&](std::size_t k) {
    E[k] = energy_->value_and_gradient(u.slice(k), std::span<double>(dE.data() + k * M, M));
  });

  std::vector<double> term(K);
  for (std::size_t k = 0; k < K; ++k)
    term[k] = fp.w_hat * kinetic_slice(u, g, k) + (fp.a_hat * E[k] + fp.b_hat * E[k + 1]) / fp.epsilon;
  const double F = geometric_sum(term, fp.decay);
  if (!std::isfinite(F)) throw NumericalError("non-finite functional value");

  // Gradient of slice k relative to the weight e^{-t_{k-1}/eps}:
  //   interval k-1 (factor 1):      w_hat dL_{k-1}/du_k + b_hat E'_k / eps
  //   interval k (factor decay):    w_hat dL_k/du_k + a_hat E'_k / eps
  const double dt2 = u.dt() * u.dt();
  const double c = fp.decay;
  const double eps = fp.epsilon;
  const double dx = g.dx;
  for (std::size_t k = 1; k <= K; ++k) {
    const double* dEk = dE.data() + k * M;
    const bool last = (k == K);
    // Relative scale e^{-t_{k-1}/eps}; only needed for the raw gradient.
    const double rel = scaled ? 1.0 : std::exp(-fp.dt * static_cast<double>(k - 1) / eps);
    const double denom = scaled ? fp.w_hat * (last ? 1.0 : 1.0 + c) * dx : 1.0;
    for (std::size_t n = 0; n < om.size(); ++n) {
      const std::size_t i = om[n];
      const double back = (u(k, i) - u(k - 1, i)) / dt2 * dx;  // dL_{k-1}/du_k
      double v = fp.w_hat * back + fp.b_hat * dEk[i] / eps;
      if (!last) {
        const double fwd = -(u(k + 1, i) - u(k, i)) / dt2 * dx;  // dL_k/du_k
        v += c * (fp.w_hat * fwd + fp.a_hat * dEk[i] / eps);
      }
      grad[(k - 1) * om.size() + n] = rel * v / denom;
    }
  }
  return F;
}

std::vector<double> RegularizedFunctional::relative_metric(const Trajectory& u) const {
  const auto& g = energy_->grid();
  const auto& fp = params_;
  const std::size_t K = fp.K, n = g.omega_size();
  std::vector<double> m(K * n);
  for (std::size_t k = 1; k <= K; ++k) {
    const double rel = std::exp(-fp.dt * static_cast<double>(k - 1) / fp.epsilon);
    const double mk = rel * (k == K ? 1.0 : 1.0 + fp.decay) / (1.0 + fp.decay);
    std::fill_n(m.begin() + static_cast<std::ptrdiff_t>((k - 1) * n), n, mk * g.dx);
  }
  (void)u;
  return m;
}

Diagnostics RegularizedFunctional::diagnostics(const Trajectory& u) const {
  const auto& g = energy_->grid();
  const auto& fp = params_;
  const std::size_t K = fp.K;
  Diagnostics d;
  d.E = slice_energies(u);
  d.L.resize(K);
  d.G.resize(K);
  d.I.assign(K + 1, 0.0);
  d.J.assign(K + 1, 0.0);
  std::vector<double> kin(K), pot(K);
  for (std::size_t k = 0; k < K; ++k) {
    d.L[k] = kinetic_slice(u, g, k);
    const double Ebar = (fp.a_hat * d.E[k] + fp.b_hat * d.E[k + 1]) / fp.w_hat;
    d.G[k] = d.L[k] + Ebar / fp.epsilon;
    kin[k] = fp.w_hat * 2.0 * d.L[k];
    pot[k] = fp.a_hat * d.E[k] + fp.b_hat * d.E[k + 1];
  }
  for (std::size_t k = K; k-- > 0;) d.J[k] = fp.w_hat * d.G[k] + fp.decay * d.J[k + 1];
  d.monotone_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    d.I[k] = std::exp(-fp.dt * static_cast<double>(k) / fp.epsilon) * d.J[k];
    d.monotone_margin = std::min(d.monotone_margin, d.J[k] - d.J[k + 1]);
  }
  d.F = d.J[0];
  d.weighted_kinetic = geometric_sum(kin, fp.decay);
  d.weighted_potential = geometric_sum(pot, fp.decay);
  CompensatedSum unweighted;
  for (std::size_t k = 0; k < K; ++k) unweighted += 2.0 * d.L[k] * u.dt();
  d.kinetic = unweighted.value();
  return d;
}

double eval_F(const FunctionalParams& params, const KernelSpec& spec, const SpaceGrid& grid,
              const Trajectory& u) {
  const DiscreteEnergy energy(spec, grid);
  return RegularizedFunctional(params, energy).value(u);
}

std::vector<double> grad_F(const FunctionalParams& params, const KernelSpec& spec,
                           const SpaceGrid& grid, const Trajectory& u) {
  const DiscreteEnergy energy(spec, grid);
  std::vector<double> g(u.free_size());
  RegularizedFunctional(params, energy).value_and_gradient(u, g, false);
  return g;
}

Diagnostics diagnostics(const FunctionalParams& params, const KernelSpec& spec,
                        const SpaceGrid& grid, const Trajectory& u) {
  const DiscreteEnergy energy(spec, grid);
  return RegularizedFunctional(params, energy).diagnostics(u);
}

}  // namespace nlevo
