#pragma once

// Run configuration, orchestration of the subcommands and text artifacts.
//
// The configuration is a flat sectioned key-value document:
//
//   [kernel]   variant = pure|double|log, p, s, q, r, a = constant|checkerboard|ramp,
//              a_value, mu, A
//   [grid]     M, K, R, T (T = 0 picks 18.4 times the largest epsilon)
//   [datum]    shape = constant|bump|step|ramp, exterior, amplitude
//   [solver]   grad_tol, max_iters, backtrack, initial_step, mu_ladder, eps_ladder,
//              seed, tol, limit_tol
//   [verify]   comparisons, tests, uniqueness
//   [output]   dir
//
// Lists are comma separated. '#' and ';' start comments.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nlevo/discretization.hpp"
#include "nlevo/kernel_density.hpp"
#include "nlevo/optimizer.hpp"
#include "nlevo/wide_driver.hpp"

namespace nlevo {

enum class ExitCode : int { Ok = 0, Unexpected = 1, Config = 2, MissingArtifact = 3, ChecksFailed = 4 };

enum class Subcommand { Solve, Verify, CompareWeak, MollifyDemo, Poincare };
std::string to_string(Subcommand c);
Subcommand subcommand_from_string(const std::string& name);

enum class Coefficient { Constant, Checkerboard, Ramp };

struct RunConfig {
  Variant variant = Variant::PurePhase;
  double p = 2.0, s = 0.5, q = 4.0, r = 0.5;
  Coefficient a_kind = Coefficient::Constant;
  double a_value = 1.0;
  double mu = 0.0;
  double A_lower = 1.0;

  std::size_t M = 64, K = 64;
  double R = 1.0, T = 0.0;

  DatumShape shape = DatumShape::Bump;
  double exterior = 1.0, amplitude = 1.0;

  SolveOptions solve;
  std::vector<double> eps_ladder{0.2, 0.1, 0.05, 0.025};
  double tol = 0.05;
  double limit_tol = 0.05;

  std::size_t comparisons = 24;
  std::size_t tests = 24;
  bool uniqueness = true;

  std::string out_dir = "nlevo_out";

  KernelSpec kernel_spec() const;
  ProblemData problem() const;
  WideOptions wide_options() const;
  double horizon() const;
  // Canonical key=value echo of every setting, in a fixed order.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

// Throws ConfigError listing every violation, each prefixed with its line.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// 17 significant digits.
std::string format_number(double v);

void write_trajectory(const std::string& path, const Trajectory& u);
// Reads a trajectory written by write_trajectory onto the given grid.
Trajectory read_trajectory(const std::string& path, const SpaceGrid& grid);

// Key-value run manifest.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, bool value);
  void check(const std::string& name, bool passed, double margin);
  bool all_passed() const noexcept { return all_passed_; }
  void write(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  bool all_passed_ = true;
};

// Runs a subcommand, writing artifacts under config.out_dir and a
// human-readable summary to log.
ExitCode run(const RunConfig& config, Subcommand command, std::ostream& log);

}  // namespace nlevo
