#pragma once

// Accelerated gradient descent with restart and backtracking for smooth
// convex objectives, in a diagonal metric.
//
// A step x+ = y - alpha g(y) is accepted when either the Armijo condition
//   f(x+) <= f(y) - alpha/2 |g(y)|_M^2
// holds, or the convexity certificate
//   <g(x+), g(y)>_M >= 1/2 |g(y)|_M^2
// does. By convexity, f(x+) <= f(y) + <grad f(x+), x+ - y>, so the certificate
// implies the same decrease; unlike the Armijo test it stays reliable once
// objective differences fall below floating-point resolution.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace nlevo {

struct SolveOptions {
  double grad_tol = 1e-8;
  std::size_t max_iters = 20000;
  double backtrack = 0.5;
  double initial_step = 1e-3;
  std::vector<double> mu_schedule;  // empty means a single rung at the kernel's mu
  std::uint64_t seed = 1;

  void validate() const;
};

// Objective in a diagonal metric M. value_grad(x, g) returns f(x) and writes
// the metric gradient g = M^{-1} grad f(x). metric holds diag(M) up to a
// positive constant factor.
struct Objective {
  std::function<double(std::span<const double>, std::span<double>)> value_grad;
  std::vector<double> metric;
};

struct SolveResult {
  std::vector<double> x;
  std::vector<double> history;  // objective after each accepted step (first entry: start)
  double value = 0.0;
  double grad_norm = 0.0;  // max-norm of the metric gradient at x
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  std::size_t restarts = 0;
  bool converged = false;
  bool stalled = false;  // no certified decrease possible before reaching grad_tol
};

SolveResult minimize(const Objective& objective, std::vector<double> x0, const SolveOptions& opts);

struct ContinuationResult {
  SolveResult final;
  std::vector<double> mus;
  std::vector<SolveResult> rungs;  // x cleared to save memory, except in final
  std::size_t total_iterations = 0;
};

// Solves along opts.mu_schedule, warm-starting each rung from the previous
// minimizer. With an empty schedule a single solve at mu_default is run.
ContinuationResult continuation_in_mu(const std::function<Objective(double mu)>& make_objective,
                                      std::vector<double> x0, const SolveOptions& opts,
                                      double mu_default);

}  // namespace nlevo
