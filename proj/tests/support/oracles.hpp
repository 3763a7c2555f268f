#pragma once

// Reference implementations used only by tests. Each one is written from the
// defining formulas, without calling the library routine it checks.

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "nlevo/discretization.hpp"
#include "nlevo/kernel_density.hpp"

namespace oracle {

// Smoothed density written out directly: every power of z is replaced by
// sqrt(z^2 + mu^2) and the xi = 0 value is subtracted.
inline double density(const nlevo::KernelSpec& k, double d, double xi, double a = 1.0) {
  const double mu = k.mu;
  const double z = std::abs(xi) / std::pow(d, k.s);
  const double w = std::sqrt(z * z + mu * mu);
  double h = 0.0;
  if (k.variant == nlevo::Variant::LogPhase) {
    h = std::pow(w, k.p) * std::log(1.0 + w) - std::pow(mu, k.p) * std::log(1.0 + mu);
  } else {
    h = std::pow(w, k.p) - std::pow(mu, k.p);
  }
  if (k.variant == nlevo::Variant::DoublePhase) {
    const double zr = std::abs(xi) / std::pow(d, k.r);
    const double wr = std::sqrt(zr * zr + mu * mu);
    h += a * (std::pow(wr, k.q) - std::pow(mu, k.q));
  }
  return h;
}

// int_d^inf density(t, xi) / t dt by composite Simpson in log t.
inline double tail_quadrature(const nlevo::KernelSpec& k, double xi, double d, double a = 1.0,
                              int n = 40000, double span = 160.0) {
  const double h = span / n;
  double acc = 0.0;
  for (int m = 0; m <= n; ++m) {
    const double t = d * std::exp(m * h);
    const double f = density(k, t, xi, a);
    const double w = (m == 0 || m == n) ? 1.0 : (m % 2 ? 4.0 : 2.0);
    acc += w * f;
  }
  return acc * h / 3.0;
}

inline bool in_omega(double x) { return x > 0.0 && x < 1.0; }

// Pair part of the slice energy: every ordered pair i != j with at least one
// point in Omega, weight dx^2 / |x_i - x_j|.
inline double pair_energy(const nlevo::KernelSpec& k, const std::vector<double>& x, double dx,
                          const std::vector<double>& u, double a = 1.0) {
  long double acc = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (i == j || !(in_omega(x[i]) || in_omega(x[j]))) continue;
      const double d = std::abs(x[i] - x[j]);
      acc += density(k, d, u[i] - u[j], a) / d * dx * dx;
    }
  return static_cast<double>(acc);
}

// Far field for an unsmoothed power phase: each Omega point sees, on each side,
// the constant exterior value beyond the outer cell edge. Ordered pairs count
// both (x, y) and (y, x).
inline double pure_tail(double p, double s, const std::vector<double>& x, double dx,
                        const std::vector<double>& u) {
  const double lo = x.front() - 0.5 * dx, hi = x.back() + 0.5 * dx;
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!in_omega(x[i])) continue;
    for (const auto& [c, d] : {std::pair{u.front(), x[i] - lo}, std::pair{u.back(), hi - x[i]}}) {
      acc += 2.0 * dx * std::pow(std::abs(u[i] - c), p) * std::pow(d, -s * p) / (s * p);
    }
  }
  return acc;
}

inline double pure_energy(double p, double s, const std::vector<double>& x, double dx,
                          const std::vector<double>& u) {
  return pair_energy(nlevo::KernelSpec::pure(p, s), x, dx, u) + pure_tail(p, s, x, dx, u);
}

// Quadratic form q(v) = 1/2 v^T H v + g^T v + c over the Omega unknowns,
// recovered from any scalar quadratic function by polarization.
struct Quadratic {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  double c = 0.0;
};

inline Quadratic polarize(std::size_t n, const std::function<double(const Eigen::VectorXd&)>& q) {
  Quadratic out;
  out.H.resize(n, n);
  out.g.resize(n);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  out.c = q(zero);
  std::vector<double> plus(n), minus(n);
  for (std::size_t a = 0; a < n; ++a) {
    Eigen::VectorXd e = zero;
    e[a] = 1.0;
    plus[a] = q(e);
    minus[a] = q(-e);
    out.g[a] = 0.5 * (plus[a] - minus[a]);
    out.H(a, a) = plus[a] + minus[a] - 2.0 * out.c;
  }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      Eigen::VectorXd e = zero;
      e[a] = 1.0;
      e[b] = 1.0;
      out.H(a, b) = out.H(b, a) = q(e) - plus[a] - plus[b] + out.c;
    }
  return out;
}

// Fractional heat operator from the p = 2 brute-force energy: with E(u) =
// dx/2 v^T A v - dx b^T v + const over the Omega unknowns v, the L^2(Omega)
// gradient flow is v' + A v = b.
struct Heat {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<std::size_t> omega;
};

inline Heat heat_operator(double s, const std::vector<double>& x, double dx,
                          const std::vector<double>& u0) {
  Heat out;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (in_omega(x[i])) out.omega.push_back(i);
  const std::size_t n = out.omega.size();
  const Quadratic q = polarize(n, [&](const Eigen::VectorXd& v) {
    std::vector<double> u = u0;
    for (std::size_t a = 0; a < n; ++a) u[out.omega[a]] = v[a];
    return pure_energy(2.0, s, x, dx, u);
  });
  out.A = q.H / dx;
  out.b = -q.g / dx;
  return out;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0,
                                         double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(n);
  for (auto& e : v) e = lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  return v;
}

}  // namespace oracle
