#include "nlevo/kernel_density.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "nlevo/errors.hpp"

namespace nlevo {
namespace {

bool is_finite(double v) { return std::isfinite(v); }

void require_pair(double x, double y, double xi) {
  if (!is_finite(x) || !is_finite(y) || !is_finite(xi)) {
    throw DomainError("density evaluated at non-finite input");
  }
  if (x == y) {
    std::ostringstream os;
    os << "density evaluated at coincident points x = y = " << x;
    throw DomainError(os.str());
  }
}

// z^p with fast paths for the common integer exponents.
double power(double z, double p) noexcept {
  if (p == 2.0) return z * z;
  if (p == 3.0) return z * z * z;
  if (p == 4.0) {
    const double z2 = z * z;
    return z2 * z2;
  }
  return std::pow(z, p);
}

enum class Profile { Power, PowerLog };

// h(zeta) and h'(zeta).
PhaseValue profile(Profile kind, double p, double zeta) noexcept {
  if (zeta <= 0.0) return {0.0, 0.0};
  const double zp = power(zeta, p);
  if (kind == Profile::Power) return {zp, p * zp / zeta};
  const double lg = std::log1p(zeta);
  return {zp * lg, p * zp / zeta * lg + zp / (1.0 + zeta)};
}

// h(sqrt(z^2 + mu^2)) - h(mu), evaluated without cancellation.
double profile_increment(Profile kind, double p, double z, double mu) noexcept {
  if (z == 0.0) return 0.0;
  if (mu == 0.0) return profile(kind, p, z).value;
  const double ratio2 = (z / mu) * (z / mu);
  // zeta^p - mu^p = mu^p * ((1 + (z/mu)^2)^{p/2} - 1)
  const double mup = power(mu, p);
  const double dpow = (p == 2.0) ? z * z : mup * std::expm1(0.5 * p * std::log1p(ratio2));
  if (kind == Profile::Power) return dpow;
  const double zeta = std::sqrt(z * z + mu * mu);
  const double dlog = std::log1p((z * z / (zeta + mu)) / (1.0 + mu));
  return dpow * std::log1p(zeta) + mup * dlog;
}

// Value and xi-derivative of one smoothed phase, given inv_d = |x - y|^-order.
DensityValue phase(Profile kind, double p, double inv_d, double mu, double xi) noexcept {
  const double z = std::abs(xi) * inv_d;
  if (z == 0.0) return {0.0, 0.0};
  if (mu == 0.0) {
    const PhaseValue h = profile(kind, p, z);
    return {h.value, std::copysign(h.slope * inv_d, xi)};
  }
  const double zeta = std::sqrt(z * z + mu * mu);
  const PhaseValue h = profile(kind, p, zeta);
  // d zeta / d xi = xi inv_d^2 / zeta
  return {profile_increment(kind, p, z, mu), h.slope * xi * inv_d * inv_d / zeta};
}

Profile primary_profile(Variant v) {
  return v == Variant::LogPhase ? Profile::PowerLog : Profile::Power;
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::PurePhase:
      return "pure";
    case Variant::DoublePhase:
      return "double";
    case Variant::LogPhase:
      return "log";
  }
  return "unknown";
}

Variant variant_from_string(const std::string& name) {
  if (name == "pure" || name == "PurePhase") return Variant::PurePhase;
  if (name == "double" || name == "DoublePhase") return Variant::DoublePhase;
  if (name == "log" || name == "LogPhase") return Variant::LogPhase;
  throw ConfigError("unknown kernel variant '" + name + "' (expected pure, double or log)");
}

void KernelSpec::validate() const {
  std::vector<std::string> errs;
  if (!(p > 1.0) || !std::isfinite(p)) errs.emplace_back("p must exceed 1");
  if (!(s > 0.0 && s < 1.0)) errs.emplace_back("s must lie in (0, 1)");
  if (!(mu >= 0.0) || !std::isfinite(mu)) errs.emplace_back("mu must be nonnegative");
  if (!(A_lower > 0.0)) errs.emplace_back("A_lower must be positive");
  if (variant == Variant::DoublePhase) {
    if (!(q >= p)) errs.emplace_back("q must be at least p for the double-phase density");
    if (!(r > 0.0 && r < 1.0)) errs.emplace_back("r must lie in (0, 1)");
    if (!a_coeff) errs.emplace_back("double-phase density needs a coefficient a(x, y)");
    if (!(a_far >= 0.0)) errs.emplace_back("far-field coefficient must be nonnegative");
  }
  if (!errs.empty()) throw ConfigError(std::move(errs));
}

KernelSpec KernelSpec::pure(double p, double s, double mu) {
  KernelSpec k;
  k.variant = Variant::PurePhase;
  k.p = p;
  k.s = s;
  k.q = p;
  k.mu = mu;
  return k;
}

KernelSpec KernelSpec::double_phase(double p, double q, double s, double r, double a_const,
                                    double mu) {
  KernelSpec k;
  k.variant = Variant::DoublePhase;
  k.p = p;
  k.q = q;
  k.s = s;
  k.r = r;
  k.a_coeff = [a_const](double, double) { return a_const; };
  k.a_far = a_const;
  k.mu = mu;
  return k;
}

KernelSpec KernelSpec::log_phase(double p, double s, double mu) {
  KernelSpec k;
  k.variant = Variant::LogPhase;
  k.p = p;
  k.s = s;
  k.q = p;
  k.mu = mu;
  return k;
}

PairFactors pair_factors(const KernelSpec& spec, double x, double y) {
  const double d = std::abs(x - y);
  PairFactors f;
  f.inv_ds = std::pow(d, -spec.s);
  if (spec.variant == Variant::DoublePhase) {
    f.inv_dr = std::pow(d, -spec.r);
    f.a = spec.a_coeff ? spec.a_coeff(x, y) : 0.0;
  }
  return f;
}

DensityValue density(const KernelSpec& spec, const PairFactors& f, double xi) noexcept {
  DensityValue out = phase(primary_profile(spec.variant), spec.p, f.inv_ds, spec.mu, xi);
  if (spec.variant == Variant::DoublePhase && f.a != 0.0) {
    const DensityValue second = phase(Profile::Power, spec.q, f.inv_dr, spec.mu, xi);
    out.value += f.a * second.value;
    out.derivative += f.a * second.derivative;
  }
  return out;
}

double density_value(const KernelSpec& spec, const PairFactors& f, double xi) noexcept {
  const Profile kind = primary_profile(spec.variant);
  double v = profile_increment(kind, spec.p, std::abs(xi) * f.inv_ds, spec.mu);
  if (spec.variant == Variant::DoublePhase && f.a != 0.0) {
    v += f.a * profile_increment(Profile::Power, spec.q, std::abs(xi) * f.inv_dr, spec.mu);
  }
  return v;
}

double eval_H(const KernelSpec& spec, double x, double y, double xi) {
  require_pair(x, y, xi);
  KernelSpec exact = spec;
  exact.mu = 0.0;
  return density_value(exact, pair_factors(spec, x, y), xi);
}

double eval_H_smoothed(const KernelSpec& spec, double x, double y, double xi) {
  require_pair(x, y, xi);
  return density_value(spec, pair_factors(spec, x, y), xi);
}

double eval_dH(const KernelSpec& spec, double x, double y, double xi) {
  require_pair(x, y, xi);
  return density(spec, pair_factors(spec, x, y), xi).derivative;
}

namespace {

// (1/order) int_0^Z [h(sqrt(z^2+mu^2)) - h(mu)] / z dz and its Z-derivative.
DensityValue far_phase(Profile kind, double p, double order, double mu, double Z) {
  if (Z == 0.0) return {0.0, 0.0};
  if (kind == Profile::Power && mu == 0.0) {
    const double zp = power(Z, p);
    return {zp / (order * p), zp / (order * Z)};
  }
  auto integrand = [&](double z) {
    return z == 0.0 ? 0.0 : profile_increment(kind, p, z, mu) / z;
  };
  using Rule = boost::math::quadrature::gauss<double, 30>;
  // Split at the smoothing scale where the integrand changes character.
  double value = 0.0;
  const double knee = std::min(Z, 4.0 * mu);
  if (knee > 0.0) value += Rule::integrate(integrand, 0.0, knee);
  if (Z > knee) value += Rule::integrate(integrand, knee, Z);
  return {value / order, profile_increment(kind, p, Z, mu) / (order * Z)};
}

}  // namespace

DensityValue far_field(const KernelSpec& spec, double xi, double edge_distance) {
  if (!(edge_distance > 0.0)) throw DomainError("far-field edge distance must be positive");
  const double a = std::abs(xi);
  const double sign = xi < 0 ? -1.0 : 1.0;
  const double inv_ds = std::pow(edge_distance, -spec.s);
  DensityValue first = far_phase(primary_profile(spec.variant), spec.p, spec.s, spec.mu, a * inv_ds);
  DensityValue out{first.value, sign * first.derivative * inv_ds};
  if (spec.variant == Variant::DoublePhase && spec.a_far > 0.0) {
    const double inv_dr = std::pow(edge_distance, -spec.r);
    DensityValue second = far_phase(Profile::Power, spec.q, spec.r, spec.mu, a * inv_dr);
    out.value += spec.a_far * second.value;
    out.derivative += spec.a_far * sign * second.derivative * inv_dr;
  }
  return out;
}

StructureReport check_structure(const KernelSpec& spec,
                                std::span<const std::pair<double, double>> sample_pairs,
                                std::span<const double> xi_grid) {
  if (sample_pairs.empty() || xi_grid.empty()) {
    throw DomainError("check_structure needs nonempty samples");
  }
  StructureReport rep;
  rep.lower_bound_margin = std::numeric_limits<double>::infinity();
  rep.convexity_margin = std::numeric_limits<double>::infinity();
  rep.min_coefficient = std::numeric_limits<double>::infinity();
  std::ostringstream worst;
  bool convex = true;

  for (const auto& [x, y] : sample_pairs) {
    require_pair(x, y, 0.0);
    if (spec.variant == Variant::DoublePhase) {
      const double axy = spec.a_coeff(x, y);
      const double ayx = spec.a_coeff(y, x);
      rep.min_coefficient = std::min({rep.min_coefficient, axy, ayx});
      rep.symmetry_defect = std::max(rep.symmetry_defect, std::abs(axy - ayx));
    }
    const double inv_ds = std::pow(std::abs(x - y), -spec.s);
    std::vector<double> h(xi_grid.size());
    for (std::size_t a = 0; a < xi_grid.size(); ++a) {
      const double xi = xi_grid[a];
      h[a] = eval_H(spec, x, y, xi);
      rep.symmetry_defect = std::max(rep.symmetry_defect, std::abs(h[a] - eval_H(spec, y, x, -xi)));
      const double margin = h[a] - spec.A_lower * power(std::abs(xi) * inv_ds, spec.p);
      if (margin < rep.lower_bound_margin) {
        rep.lower_bound_margin = margin;
        if (margin < 0.0) {
          worst.str("");
          worst << "lower bound violated at x=" << x << " y=" << y << " xi=" << xi
                << " by " << -margin;
        }
      }
    }
    for (std::size_t a = 0; a < xi_grid.size(); ++a) {
      for (std::size_t b = a + 1; b < xi_grid.size(); ++b) {
        const double mid = eval_H(spec, x, y, 0.5 * (xi_grid[a] + xi_grid[b]));
        const double margin = 0.5 * (h[a] + h[b]) - mid;
        const double slack = 1e-12 * (1.0 + std::abs(h[a]) + std::abs(h[b]));
        if (margin + slack < 0.0) {
          convex = false;
          if (margin < rep.convexity_margin) {
            worst.str("");
            worst << "midpoint convexity violated at x=" << x << " y=" << y << " between xi="
                  << xi_grid[a] << " and xi=" << xi_grid[b];
          }
        }
        rep.convexity_margin = std::min(rep.convexity_margin, margin);
      }
    }
  }
  if (spec.variant != Variant::DoublePhase) rep.min_coefficient = 0.0;
  if (xi_grid.size() < 2) rep.convexity_margin = 0.0;
  rep.passed = rep.lower_bound_margin >= 0.0 && convex && rep.symmetry_defect == 0.0 &&
               rep.min_coefficient >= 0.0;
  if (!rep.passed && worst.str().empty()) {
    worst << (rep.symmetry_defect != 0.0 ? "density or coefficient is not symmetric"
                                          : "coefficient a(x, y) is negative");
  }
  rep.worst = worst.str();
  return rep;
}

}  // namespace nlevo
