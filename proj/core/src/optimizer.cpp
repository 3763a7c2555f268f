#include "nlevo/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "nlevo/errors.hpp"

namespace nlevo {

void SolveOptions::validate() const {
  std::vector<std::string> bad;
  if (!(grad_tol > 0.0)) bad.push_back("grad_tol must be positive");
  if (max_iters == 0) bad.push_back("max_iters must be positive");
  if (!(backtrack > 0.0 && backtrack < 1.0)) bad.push_back("backtracking factor must lie in (0, 1)");
  if (!(initial_step > 0.0)) bad.push_back("initial step must be positive");
  for (std::size_t i = 0; i < mu_schedule.size(); ++i) {
    if (!(mu_schedule[i] > 0.0)) bad.push_back("mu schedule entries must be positive");
    if (i > 0 && !(mu_schedule[i] < mu_schedule[i - 1]))
      bad.push_back("mu schedule must be strictly decreasing");
  }
  if (!bad.empty()) throw ConfigError(std::move(bad));
}

namespace {

double dot(std::span<const double> m, std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += m[i] * a[i] * b[i];
  return acc;
}

double max_abs(std::span<const double> v) {
  double r = 0.0;
  for (double x : v) r = std::max(r, std::abs(x));
  return r;
}

}  // namespace

SolveResult minimize(const Objective& objective, std::vector<double> x0, const SolveOptions& opts) {
  opts.validate();
  const std::size_t n = x0.size();
  std::vector<double> metric = objective.metric;
  if (metric.empty()) metric.assign(n, 1.0);
  if (metric.size() != n) throw DomainError("metric size mismatch");

  SolveResult res;
  auto eval = [&](std::span<const double> x, std::span<double> g) {
    ++res.evaluations;
    const double f = objective.value_grad(x, g);
    if (!std::isfinite(f)) throw NumericalError("objective is not finite");
    return f;
  };

  std::vector<double> x = std::move(x0), x_prev = x, y(n), gx(n), gy(n), xn(n), gn(n);
  double fx = eval(x, gx);
  res.history.push_back(fx);
  double alpha = opts.initial_step;
  double theta = 1.0;  // momentum parameter
  const double tiny_step = opts.initial_step * 1e-30;

  for (std::size_t it = 0; it < opts.max_iters; ++it) {
    res.iterations = it;
    if (max_abs(gx) <= opts.grad_tol) {
      res.converged = true;
      break;
    }

    const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    const double beta = (theta - 1.0) / theta_next;
    double fy = fx;
    if (beta > 0.0) {
      for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + beta * (x[i] - x_prev[i]);
      fy = eval(y, gy);
    } else {
      y = x;
      gy = gx;
    }

    const double gy2 = dot(metric, gy, gy);
    bool accepted = false;
    bool first_try = true;
    double fn = 0.0;
    while (alpha > tiny_step) {
      for (std::size_t i = 0; i < n; ++i) xn[i] = y[i] - alpha * gy[i];
      fn = eval(xn, gn);
      const bool armijo = fn <= fy - 0.5 * alpha * gy2;
      const bool certified = dot(metric, gn, gy) >= 0.5 * gy2;
      if (armijo || certified) {
        accepted = true;
        break;
      }
      alpha *= opts.backtrack;
      first_try = false;
    }

    if (!accepted) {
      if (beta > 0.0) {
        // Momentum point was too far out; restart from x.
        theta = 1.0;
        x_prev = x;
        ++res.restarts;
        alpha = opts.initial_step;
        continue;
      }
      res.stalled = true;
      break;
    }

    // Decrease relative to x: certified by convexity through <grad f(x+), x+ - x> <= 0.
    double cert = 0.0;
    for (std::size_t i = 0; i < n; ++i) cert += metric[i] * gn[i] * (xn[i] - x[i]);
    if (beta > 0.0 && fn > fx && cert > 0.0) {
      theta = 1.0;
      x_prev = x;
      ++res.restarts;
      continue;
    }
    // Gradient-based restart: momentum pointing uphill.
    double uphill = 0.0;
    for (std::size_t i = 0; i < n; ++i) uphill += metric[i] * gy[i] * (xn[i] - x[i]);
    if (uphill > 0.0) {
      theta = 1.0;
      ++res.restarts;
    } else {
      theta = theta_next;
    }

    x_prev.swap(x);
    x.swap(xn);
    gx.swap(gn);
    fx = fn;
    res.history.push_back(fx);
    if (first_try) alpha *= 1.25;
  }

  res.value = fx;
  res.grad_norm = max_abs(gx);
  if (res.grad_norm <= opts.grad_tol) res.converged = true;
  res.x = std::move(x);
  return res;
}

ContinuationResult continuation_in_mu(const std::function<Objective(double mu)>& make_objective,
                                      std::vector<double> x0, const SolveOptions& opts,
                                      double mu_default) {
  opts.validate();
  ContinuationResult out;
  out.mus = opts.mu_schedule.empty() ? std::vector<double>{mu_default} : opts.mu_schedule;
  std::vector<double> x = std::move(x0);
  for (double mu : out.mus) {
    SolveResult r = minimize(make_objective(mu), std::move(x), opts);
    out.total_iterations += r.iterations;
    x = r.x;
    out.final = r;
    r.x.clear();
    out.rungs.push_back(std::move(r));
  }
  return out;
}

}  // namespace nlevo
