#pragma once

// Nonlocal integrand densities H(x, y, xi) and their xi-derivatives.
//
// All densities are written in the normalized variable z = |xi| / |x - y|^s
// (z_r = |xi| / |x - y|^r for the second phase), so that
//
//   PurePhase    H = z^p
//   DoublePhase  H = z^p + a(x, y) z_r^q
//   LogPhase     H = z^p log(1 + z)
//
// The smoothed variant used by the functional replaces z by sqrt(z^2 + mu^2)
// and subtracts the value at xi = 0, so H_mu(x, y, 0) = 0 for every mu.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nlevo {

enum class Variant { PurePhase, DoublePhase, LogPhase };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

using PairCoefficient = std::function<double(double x, double y)>;

struct KernelSpec {
  Variant variant = Variant::PurePhase;
  double p = 2.0;
  double s = 0.5;
  double q = 2.0;  // DoublePhase only
  double r = 0.5;  // DoublePhase only
  PairCoefficient a_coeff;  // DoublePhase only; nonnegative and symmetric
  // Value of a(x, y) for pairs reaching beyond the truncated box. Zero unless
  // the coefficient is constant.
  double a_far = 0.0;
  double mu = 0.0;
  double A_lower = 1.0;

  // Throws ConfigError listing every violated parameter constraint.
  void validate() const;

  static KernelSpec pure(double p, double s, double mu = 0.0);
  static KernelSpec double_phase(double p, double q, double s, double r, double a_const,
                                 double mu = 0.0);
  static KernelSpec log_phase(double p, double s, double mu = 0.0);
};

// Profile h(zeta) of one phase and its derivative. Exposed for the tail
// quadrature and for tests.
struct PhaseValue {
  double value;
  double slope;
};

// Exact density H(x, y, xi). Throws DomainError for x == y or non-finite input.
double eval_H(const KernelSpec& spec, double x, double y, double xi);

// Smoothed density H_mu(x, y, xi) with mu = spec.mu; equals eval_H for mu = 0.
double eval_H_smoothed(const KernelSpec& spec, double x, double y, double xi);

// d/dxi of the smoothed density. Odd in xi.
double eval_dH(const KernelSpec& spec, double x, double y, double xi);

// Kernel-dependent per-pair constants, computed once per grid pair.
struct PairFactors {
  double inv_ds = 0.0;  // |x - y|^-s
  double inv_dr = 0.0;  // |x - y|^-r
  double a = 0.0;       // a(x, y)
};

PairFactors pair_factors(const KernelSpec& spec, double x, double y);

// Smoothed density and derivative given precomputed pair factors. This is the
// hot path used by the discrete energies.
struct DensityValue {
  double value;
  double derivative;
};
DensityValue density(const KernelSpec& spec, const PairFactors& f, double xi) noexcept;
double density_value(const KernelSpec& spec, const PairFactors& f, double xi) noexcept;

// Integral over the far field: for a point at distance d from the truncation
// edge and a jump xi to the exterior value,
//   tail(xi, d) = int_d^inf H_mu(xi; |x - y| = t) / t dt
// together with its xi-derivative. Closed form for unsmoothed power phases,
// Gauss-Legendre in the normalized variable otherwise.
DensityValue far_field(const KernelSpec& spec, double xi, double edge_distance);

struct StructureReport {
  bool passed = true;
  double lower_bound_margin = 0.0;  // min over samples of H - A (|xi|/|x-y|^s)^p
  double convexity_margin = 0.0;    // min of (H(a)+H(b))/2 - H((a+b)/2)
  double symmetry_defect = 0.0;     // max |a(x,y) - a(y,x)| and |H(x,y,xi) - H(y,x,-xi)|
  double min_coefficient = 0.0;     // min sampled a(x, y) (DoublePhase)
  std::string worst;                // description of the worst sample, if failed
};

// Checks the coercive lower bound and midpoint convexity of the exact density
// on every sample pair and every pair of xi values.
StructureReport check_structure(const KernelSpec& spec,
                                std::span<const std::pair<double, double>> sample_pairs,
                                std::span<const double> xi_grid);

}  // namespace nlevo
