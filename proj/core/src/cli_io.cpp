#include "nlevo/cli_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include "nlevo/errors.hpp"
#include "nlevo/mollifier.hpp"
#include "nlevo/regularized_functional.hpp"
#include "nlevo/verification.hpp"

namespace nlevo {

namespace fs = std::filesystem;

std::string to_string(Subcommand c) {
  switch (c) {
    case Subcommand::Solve: return "solve";
    case Subcommand::Verify: return "verify";
    case Subcommand::CompareWeak: return "compare-weak";
    case Subcommand::MollifyDemo: return "mollify-demo";
    case Subcommand::Poincare: return "poincare";
  }
  return "?";
}

Subcommand subcommand_from_string(const std::string& name) {
  for (auto c : {Subcommand::Solve, Subcommand::Verify, Subcommand::CompareWeak,
                 Subcommand::MollifyDemo, Subcommand::Poincare})
    if (to_string(c) == name) return c;
  throw ConfigError("unknown subcommand '" + name + "'");
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string coefficient_name(Coefficient c) {
  switch (c) {
    case Coefficient::Constant: return "constant";
    case Coefficient::Checkerboard: return "checkerboard";
    case Coefficient::Ramp: return "ramp";
  }
  return "?";
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_number(v[i]);
  return out;
}

struct Entry {
  std::string value;
  int line;
};

const std::set<std::string> kKnownKeys = {
    "kernel.variant", "kernel.p", "kernel.s", "kernel.q", "kernel.r", "kernel.a", "kernel.a_value",
    "kernel.mu", "kernel.A", "grid.M", "grid.K", "grid.R", "grid.T", "datum.shape",
    "datum.exterior", "datum.amplitude", "solver.grad_tol", "solver.max_iters",
    "solver.backtrack", "solver.initial_step", "solver.mu_ladder", "solver.eps_ladder",
    "solver.seed", "solver.tol", "solver.limit_tol", "verify.comparisons", "verify.tests",
    "verify.uniqueness", "output.dir"};

class Reader {
 public:
  explicit Reader(const std::string& text) {
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      std::string l = raw;
      const auto c = l.find_first_of("#;");
      if (c != std::string::npos) l.erase(c);
      l = trim(l);
      if (l.empty()) continue;
      if (l.front() == '[') {
        if (l.back() != ']' || l.size() < 3) {
          errors.push_back("line " + std::to_string(line) + ", column " +
                           std::to_string(raw.find('[') + 1) + ": malformed section header");
          continue;
        }
        section = trim(l.substr(1, l.size() - 2));
        continue;
      }
      const auto eq = l.find('=');
      if (eq == std::string::npos) {
        errors.push_back("line " + std::to_string(line) + ", column " +
                         std::to_string(raw.find_first_not_of(" \t") + 1) +
                         ": expected 'key = value'");
        continue;
      }
      const std::string key = trim(l.substr(0, eq));
      const std::string value = trim(l.substr(eq + 1));
      const std::string full = section + "." + key;
      if (section.empty()) {
        errors.push_back("line " + std::to_string(line) + ": key '" + key + "' outside any section");
      } else if (!kKnownKeys.count(full)) {
        errors.push_back("line " + std::to_string(line) + ": unknown key '" + key + "' in [" +
                         section + "]");
      } else if (entries.count(full)) {
        errors.push_back("line " + std::to_string(line) + ": duplicate key '" + full + "'");
      } else {
        entries[full] = {value, line};
      }
    }
  }

  std::string where(const std::string& key) const {
    auto it = entries.find(key);
    return it == entries.end() ? "default " + key : "line " + std::to_string(it->second.line);
  }
  void fail(const std::string& key, const std::string& msg) { errors.push_back(where(key) + ": " + msg); }

  void get(const std::string& key, double& out) {
    auto it = entries.find(key);
    if (it == entries.end()) return;
    const std::string& v = it->second.value;
    double x = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) {
      fail(key, "'" + v + "' is not a finite number");
      return;
    }
    out = x;
  }
  void get(const std::string& key, std::size_t& out) {
    auto it = entries.find(key);
    if (it == entries.end()) return;
    const std::string& v = it->second.value;
    unsigned long long x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) {
      fail(key, "'" + v + "' is not a nonnegative integer");
      return;
    }
    out = static_cast<std::size_t>(x);
  }
  void get(const std::string& key, bool& out) {
    auto it = entries.find(key);
    if (it == entries.end()) return;
    const std::string& v = it->second.value;
    if (v == "true" || v == "1" || v == "yes") out = true;
    else if (v == "false" || v == "0" || v == "no") out = false;
    else fail(key, "'" + v + "' is not a boolean");
  }
  void get(const std::string& key, std::vector<double>& out) {
    auto it = entries.find(key);
    if (it == entries.end()) return;
    std::vector<double> vals;
    std::stringstream ss(it->second.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      double x = 0.0;
      auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
      if (item.empty() || ec != std::errc() || p != item.data() + item.size() || !std::isfinite(x)) {
        fail(key, "'" + item + "' is not a finite number");
        return;
      }
      vals.push_back(x);
    }
    out = std::move(vals);
  }
  const std::string* raw(const std::string& key) const {
    auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second.value;
  }

  std::map<std::string, Entry> entries;
  std::vector<std::string> errors;
};

}  // namespace

RunConfig parse_config(const std::string& text) {
  Reader rd(text);
  RunConfig c;
  if (auto v = rd.raw("kernel.variant")) {
    if (*v == "pure") c.variant = Variant::PurePhase;
    else if (*v == "double") c.variant = Variant::DoublePhase;
    else if (*v == "log") c.variant = Variant::LogPhase;
    else rd.fail("kernel.variant", "unknown variant '" + *v + "' (pure, double, log)");
  }
  rd.get("kernel.p", c.p);
  rd.get("kernel.s", c.s);
  rd.get("kernel.q", c.q);
  rd.get("kernel.r", c.r);
  if (auto v = rd.raw("kernel.a")) {
    if (*v == "constant") c.a_kind = Coefficient::Constant;
    else if (*v == "checkerboard") c.a_kind = Coefficient::Checkerboard;
    else if (*v == "ramp") c.a_kind = Coefficient::Ramp;
    else rd.fail("kernel.a", "unknown coefficient '" + *v + "' (constant, checkerboard, ramp)");
  }
  rd.get("kernel.a_value", c.a_value);
  rd.get("kernel.mu", c.mu);
  rd.get("kernel.A", c.A_lower);
  rd.get("grid.M", c.M);
  rd.get("grid.K", c.K);
  rd.get("grid.R", c.R);
  rd.get("grid.T", c.T);
  if (auto v = rd.raw("datum.shape")) {
    try {
      c.shape = datum_from_string(*v);
    } catch (const ConfigError&) {
      rd.fail("datum.shape", "unknown datum shape '" + *v + "' (constant, bump, step, ramp)");
    }
  }
  rd.get("datum.exterior", c.exterior);
  rd.get("datum.amplitude", c.amplitude);
  rd.get("solver.grad_tol", c.solve.grad_tol);
  rd.get("solver.max_iters", c.solve.max_iters);
  rd.get("solver.backtrack", c.solve.backtrack);
  rd.get("solver.initial_step", c.solve.initial_step);
  rd.get("solver.mu_ladder", c.solve.mu_schedule);
  rd.get("solver.eps_ladder", c.eps_ladder);
  rd.get("solver.seed", c.solve.seed);
  rd.get("solver.tol", c.tol);
  rd.get("solver.limit_tol", c.limit_tol);
  rd.get("verify.comparisons", c.comparisons);
  rd.get("verify.tests", c.tests);
  rd.get("verify.uniqueness", c.uniqueness);
  if (auto v = rd.raw("output.dir")) c.out_dir = *v;

  // Semantic checks.
  if (!(c.p > 1.0)) rd.fail("kernel.p", "p must exceed 1");
  if (!(c.s > 0.0 && c.s < 1.0)) rd.fail("kernel.s", "s must lie in (0, 1)");
  if (c.variant == Variant::DoublePhase) {
    if (!(c.q >= c.p)) rd.fail("kernel.q", "q must be at least p");
    if (!(c.r > 0.0 && c.r < 1.0)) rd.fail("kernel.r", "r must lie in (0, 1)");
    if (!(c.a_value >= 0.0)) rd.fail("kernel.a_value", "a_value must be nonnegative");
  }
  if (!(c.mu >= 0.0)) rd.fail("kernel.mu", "mu must be nonnegative");
  if (!(c.A_lower > 0.0)) rd.fail("kernel.A", "A must be positive");
  const bool needs_smoothing = c.p < 2.0 || (c.variant == Variant::DoublePhase && c.q < 2.0);
  if (needs_smoothing && c.mu == 0.0 && c.solve.mu_schedule.empty())
    rd.fail("kernel.mu", "mu (or solver.mu_ladder) must be positive when an exponent is below 2");
  if (c.M < 8) rd.fail("grid.M", "M must be at least 8");
  if (c.M > 4096) rd.fail("grid.M", "M must be at most 4096");
  if (c.K < 2) rd.fail("grid.K", "K must be at least 2");
  if (!(c.R >= 1.0)) rd.fail("grid.R", "R must be at least 1");
  if (!(c.T >= 0.0)) rd.fail("grid.T", "T must be nonnegative (0 selects the default)");
  if (c.eps_ladder.size() < 3) rd.fail("solver.eps_ladder", "epsilon ladder needs at least three rungs");
  for (std::size_t i = 0; i < c.eps_ladder.size(); ++i) {
    if (!(c.eps_ladder[i] > 0.0)) {
      rd.fail("solver.eps_ladder", "epsilon values must be positive");
      break;
    }
    if (i > 0 && !(c.eps_ladder[i] < c.eps_ladder[i - 1])) {
      rd.fail("solver.eps_ladder", "epsilon ladder must be strictly decreasing");
      break;
    }
  }
  if (c.T > 0.0 && !c.eps_ladder.empty()) {
    const double emax = *std::max_element(c.eps_ladder.begin(), c.eps_ladder.end());
    if (c.T < kHorizonFactor * emax * (1.0 - 1e-12))
      rd.fail("grid.T", "T must be at least 18.4 times the largest epsilon");
  }
  for (std::size_t i = 0; i < c.solve.mu_schedule.size(); ++i) {
    if (!(c.solve.mu_schedule[i] > 0.0)) {
      rd.fail("solver.mu_ladder", "mu ladder entries must be positive");
      break;
    }
    if (i > 0 && !(c.solve.mu_schedule[i] < c.solve.mu_schedule[i - 1])) {
      rd.fail("solver.mu_ladder", "mu ladder must be strictly decreasing");
      break;
    }
  }
  if (!(c.solve.grad_tol > 0.0)) rd.fail("solver.grad_tol", "grad_tol must be positive");
  if (c.solve.max_iters == 0) rd.fail("solver.max_iters", "max_iters must be positive");
  if (!(c.solve.backtrack > 0.0 && c.solve.backtrack < 1.0))
    rd.fail("solver.backtrack", "backtrack must lie in (0, 1)");
  if (!(c.solve.initial_step > 0.0)) rd.fail("solver.initial_step", "initial_step must be positive");
  if (!(c.tol >= 0.0)) rd.fail("solver.tol", "tol must be nonnegative");
  if (!(c.limit_tol > 0.0)) rd.fail("solver.limit_tol", "limit_tol must be positive");
  if (c.comparisons < 4) rd.fail("verify.comparisons", "comparisons must be at least 4");
  if (c.tests < 1) rd.fail("verify.tests", "tests must be at least 1");
  if (c.out_dir.empty()) rd.fail("output.dir", "output directory must not be empty");

  if (!rd.errors.empty()) throw ConfigError(rd.errors);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

KernelSpec RunConfig::kernel_spec() const {
  KernelSpec k;
  switch (variant) {
    case Variant::PurePhase: k = KernelSpec::pure(p, s, mu); break;
    case Variant::LogPhase: k = KernelSpec::log_phase(p, s, mu); break;
    case Variant::DoublePhase: {
      k = KernelSpec::double_phase(p, q, s, r, a_value, mu);
      const double a0 = a_value;
      if (a_kind == Coefficient::Checkerboard) {
        k.a_coeff = [a0](double x, double y) {
          const long cx = static_cast<long>(std::floor(4.0 * x));
          const long cy = static_cast<long>(std::floor(4.0 * y));
          return ((cx + cy) % 2 == 0) ? a0 : 0.0;
        };
        k.a_far = 0.0;
      } else if (a_kind == Coefficient::Ramp) {
        k.a_coeff = [a0](double x, double y) {
          return a0 * 0.5 * (std::clamp(x, 0.0, 1.0) + std::clamp(y, 0.0, 1.0));
        };
        k.a_far = 0.0;
      }
      break;
    }
  }
  k.A_lower = A_lower;
  return k;
}

ProblemData RunConfig::problem() const {
  SpaceGrid g = build_grid(R, M);
  std::vector<double> u0 = sample_datum(g, shape, exterior, amplitude);
  return make_problem(std::move(g), std::move(u0), kernel_spec());
}

double RunConfig::horizon() const {
  return T > 0.0 ? T : kHorizonFactor * *std::max_element(eps_ladder.begin(), eps_ladder.end());
}

WideOptions RunConfig::wide_options() const {
  WideOptions w;
  w.solve = solve;
  w.K = K;
  w.T = horizon();
  w.tol = tol;
  w.limit_tol = limit_tol;
  return w;
}

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
  return {
      {"kernel.variant", to_string(variant)},
      {"kernel.p", format_number(p)},
      {"kernel.s", format_number(s)},
      {"kernel.q", format_number(q)},
      {"kernel.r", format_number(r)},
      {"kernel.a", coefficient_name(a_kind)},
      {"kernel.a_value", format_number(a_value)},
      {"kernel.mu", format_number(mu)},
      {"kernel.A", format_number(A_lower)},
      {"grid.M", std::to_string(M)},
      {"grid.K", std::to_string(K)},
      {"grid.R", format_number(R)},
      {"grid.T", format_number(horizon())},
      {"datum.shape", to_string(shape)},
      {"datum.exterior", format_number(exterior)},
      {"datum.amplitude", format_number(amplitude)},
      {"solver.grad_tol", format_number(solve.grad_tol)},
      {"solver.max_iters", std::to_string(solve.max_iters)},
      {"solver.backtrack", format_number(solve.backtrack)},
      {"solver.initial_step", format_number(solve.initial_step)},
      {"solver.mu_ladder", join(solve.mu_schedule)},
      {"solver.eps_ladder", join(eps_ladder)},
      {"solver.seed", std::to_string(solve.seed)},
      {"solver.tol", format_number(tol)},
      {"solver.limit_tol", format_number(limit_tol)},
      {"verify.comparisons", std::to_string(comparisons)},
      {"verify.tests", std::to_string(tests)},
      {"verify.uniqueness", uniqueness ? "true" : "false"},
      {"output.dir", out_dir},
  };
}

void write_trajectory(const std::string& path, const Trajectory& u) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "# trajectory K=" << u.steps() << " M=" << u.points() << " dt=" << format_number(u.dt())
      << "\n";
  for (std::size_t k = 0; k <= u.steps(); ++k) {
    out << "# k=" << k << " t=" << format_number(u.time(k)) << "\n";
    const auto sl = u.slice(k);
    for (std::size_t i = 0; i < sl.size(); ++i) out << (i ? " " : "") << format_number(sl[i]);
    out << "\n\n";
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

Trajectory read_trajectory(const std::string& path, const SpaceGrid& grid) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::string header;
  std::getline(in, header);
  std::size_t K = 0, M = 0;
  double dt = 0.0;
  if (std::sscanf(header.c_str(), "# trajectory K=%zu M=%zu dt=%lf", &K, &M, &dt) != 3)
    throw IoError("'" + path + "' is not a trajectory file");
  if (M != grid.size()) throw IoError("'" + path + "' was written on a different grid");
  Trajectory u(grid, K, dt * static_cast<double>(K));
  std::string line;
  std::size_t k = 0;
  while (std::getline(in, line) && k <= K) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    auto sl = u.slice(k);
    for (std::size_t i = 0; i < M; ++i)
      if (!(ss >> sl[i])) throw IoError("'" + path + "' is truncated at slice " + std::to_string(k));
    ++k;
  }
  if (k != K + 1) throw IoError("'" + path + "' holds " + std::to_string(k) + " slices, expected " +
                              std::to_string(K + 1));
  return u;
}

void Manifest::set(const std::string& key, const std::string& value) {
  for (auto& e : entries_)
    if (e.first == key) {
      e.second = value;
      return;
    }
  entries_.emplace_back(key, value);
}
void Manifest::set(const std::string& key, double value) { set(key, format_number(value)); }
void Manifest::set(const std::string& key, bool value) {
  set(key, std::string(value ? "true" : "false"));
}

void Manifest::check(const std::string& name, bool passed, double margin) {
  set("check." + name + ".passed", passed);
  set("check." + name + ".margin", margin);
  all_passed_ = all_passed_ && passed;
}

void Manifest::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (const auto& [k, v] : entries_) out << k << "=" << v << "\n";
  out << "all_passed=" << (all_passed_ ? "true" : "false") << "\n";
  if (!out) throw IoError("write to '" + path + "' failed");
}

namespace {

class Csv {
 public:
  Csv(const std::string& path, const std::string& header) : out_(path), path_(path) {
    if (!out_) throw IoError("cannot write '" + path + "'");
    out_ << header << "\n";
  }
  template <typename... Ts>
  void row(const Ts&... cols) {
    std::size_t n = 0;
    ((out_ << (n++ ? "," : "") << cell(cols)), ...);
    out_ << "\n";
  }
  ~Csv() = default;

 private:
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "true" : "false"; }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }
  std::ofstream out_;
  std::string path_;
};

std::string path_in(const RunConfig& c, const std::string& name) {
  return (fs::path(c.out_dir) / name).string();
}

void log_check(std::ostream& log, const std::string& name, bool passed, double margin) {
  log << (passed ? "  ok    " : "  FAIL  ") << name << "  margin=" << format_number(margin) << "\n";
}

struct Session {
  const RunConfig& cfg;
  std::ostream& log;
  Manifest manifest;

  void check(const std::string& name, bool passed, double margin) {
    manifest.check(name, passed, margin);
    log_check(log, name, passed, margin);
  }
};

void run_solve(Session& s) {
  const RunConfig& c = s.cfg;
  const ProblemData problem = c.problem();
  const KernelSpec spec = c.kernel_spec();
  const WideOptions wo = c.wide_options();
  s.manifest.set("lambda_disc", problem.lambda_disc);
  s.log << "lambda_disc=" << format_number(problem.lambda_disc) << "  T=" << format_number(wo.T)
        << "\n";
  const LadderReport rep = run_ladder(c.eps_ladder, problem, spec, wo);

  Csv ladder(path_in(c, "ladder.csv"),
             "epsilon,F,F_bound,minimality_margin,weighted_kinetic,kinetic_margin,"
             "weighted_potential,potential_margin,monotone_margin,unweighted_kinetic,"
             "slab_worst_ratio,slab_checked,slab_skipped,holder_worst_ratio,iterations,"
             "grad_norm,converged,cauchy");
  for (std::size_t j = 0; j < rep.rungs.size(); ++j) {
    const RungRecord& r = rep.rungs[j];
    ladder.row(r.epsilon, r.F, r.F_bound, r.minimality_margin, r.diag.weighted_kinetic,
               r.kinetic_margin, r.diag.weighted_potential, r.potential_margin, r.monotone_margin,
               r.diag.kinetic, r.slabs.worst_ratio, r.slabs.checked, r.slabs.skipped,
               r.holder.worst_ratio, r.solve.iterations, r.solve.grad_norm, r.solve.converged,
               j == 0 ? 0.0 : rep.cauchy[j - 1]);
    Csv diag(path_in(c, "diagnostics_" + std::to_string(j) + ".csv"), "k,t,L,G,I,J,E");
    for (std::size_t k = 0; k <= r.u.steps(); ++k) {
      if (k < r.u.steps())
        diag.row(k, r.u.time(k), r.diag.L[k], r.diag.G[k], r.diag.I[k], r.diag.J[k], r.diag.E[k]);
      else
        diag.row(k, r.u.time(k), "", "", r.diag.I[k], r.diag.J[k], r.diag.E[k]);
    }
    const std::string pre = "rung" + std::to_string(j) + ".";
    s.manifest.set(pre + "epsilon", r.epsilon);
    s.log << "rung " << j << " eps=" << format_number(r.epsilon) << " iterations=" << r.solve.iterations
          << " |g|=" << format_number(r.solve.grad_norm) << "\n";
    s.check(pre + "converged", r.solve.converged, -r.solve.grad_norm);
    s.check(pre + "minimality", r.minimality_margin >= 0.0, r.minimality_margin);
    s.check(pre + "weighted_kinetic", r.kinetic_margin >= 0.0, r.kinetic_margin);
    s.check(pre + "weighted_potential", r.potential_margin >= 0.0, r.potential_margin);
    s.check(pre + "monotone", r.monotone_margin >= 0.0, r.monotone_margin);
    s.check(pre + "unweighted_kinetic", r.unweighted_kinetic_margin >= 0.0, r.unweighted_kinetic_margin);
    s.check(pre + "slab", r.slabs.passed, 1.0 + c.tol - r.slabs.worst_ratio);
  }
  write_trajectory(path_in(c, "solution.txt"), rep.limit);

  const RungRecord& last = rep.rungs.back();
  s.check("ladder.cauchy", rep.converged, c.limit_tol - rep.cauchy.back());
  s.check("limit.unweighted_kinetic", last.unweighted_kinetic_margin >= 0.0,
          last.unweighted_kinetic_margin);
  s.check("limit.holder", last.holder.passed, last.holder.worst_margin);
  s.check("limit.initial_recovery", rep.initial_recovery_ratio <= 1.0 + c.tol,
          1.0 + c.tol - rep.initial_recovery_ratio);
  if (spec.p >= 2.0) {
    const PoincareEstimate pe = estimate_poincare(problem.grid, spec.p, spec.s, 5000);
    const CoercivityReport cr = coercivity_report(problem, spec, rep.limit, pe.constant);
    s.manifest.set("poincare_constant", pe.constant);
    s.check("limit.coercivity", cr.passed, cr.worst_margin);
  }
}

void run_verify(Session& s) {
  const RunConfig& c = s.cfg;
  const ProblemData problem = c.problem();
  const KernelSpec spec = c.kernel_spec();
  const std::string sol = path_in(c, "solution.txt");
  if (!fs::exists(sol)) throw IoError("missing solution file: " + sol);
  const Trajectory u = read_trajectory(sol, problem.grid);
  const DiscreteEnergy energy(spec, problem.grid);
  const double tol = default_violation_tol(problem.lambda_disc);
  const std::uint64_t seed = c.solve.seed;
  s.manifest.set("lambda_disc", problem.lambda_disc);
  s.manifest.set("violation_tol", tol);

  Csv out(path_in(c, "verify.csv"), "battery,label,margin");
  const BatteryReport vi = variational_battery(u, problem, energy, c.comparisons, seed, tol);
  for (std::size_t n = 0; n < vi.margins.size(); ++n) out.row("variational", vi.labels[n], vi.margins[n]);
  s.check("variational_inequality", vi.passed, vi.worst + tol);

  const Trajectory bad = corrupt(u, problem.grid, seed + 1);
  const BatteryReport neg = variational_battery(bad, problem, energy, c.comparisons, seed, tol);
  for (std::size_t n = 0; n < neg.margins.size(); ++n) out.row("negative_control", neg.labels[n], neg.margins[n]);
  s.check("negative_control_detected", !neg.passed, -(neg.worst + tol));

  const BatteryReport pm = parabolic_battery(u, problem, energy, c.tests, seed, tol);
  for (std::size_t n = 0; n < pm.margins.size(); ++n) out.row("parabolic", pm.labels[n], pm.margins[n]);
  s.check("parabolic_minimizer", pm.passed, pm.worst + tol);

  double fv = INFINITY;
  const auto phis = test_function_battery(u, problem, 4, seed + 2);
  for (const auto& phi : phis) {
    const double l = first_variation_limit(u, phi.v, problem, energy);
    out.row("first_variation", phi.family + ":" + std::to_string(phi.amplitude), l);
    fv = std::min(fv, l);
  }
  s.check("first_variation", fv >= -tol, fv + tol);

  const double gc = gradient_check(spec, seed);
  s.check("gradient", gc <= 1e-5, 1e-5 - gc);

  if (c.uniqueness) {
    KernelSpec us = spec;
    const UniquenessReport ur = check_uniqueness(problem, us, c.eps_ladder, c.wide_options(), seed + 3);
    for (std::size_t n = 0; n < ur.gaps.size(); ++n)
      out.row("uniqueness", "pair" + std::to_string(n), ur.gaps[n]);
    s.manifest.set("uniqueness_tol", ur.tol);
    s.check("uniqueness", ur.passed, ur.tol - ur.max_gap);
  }
}

void run_compare(Session& s) {
  const RunConfig& c = s.cfg;
  const ProblemData problem = c.problem();
  const KernelSpec spec = c.kernel_spec();
  if (spec.variant != Variant::PurePhase)
    throw ConfigError("compare-weak requires kernel.variant = pure");
  const WideOptions wo = c.wide_options();
  const std::string sol = path_in(c, "solution.txt");
  Trajectory wide;
  if (fs::exists(sol)) {
    wide = read_trajectory(sol, problem.grid);
    s.log << "using stored solution " << sol << "\n";
  } else {
    wide = run_ladder(c.eps_ladder, problem, spec, wo).limit;
    write_trajectory(sol, wide);
  }
  SolveOptions eo = c.solve;
  eo.grad_tol = std::min(eo.grad_tol, 1e-9);
  const EulerResult eu = implicit_euler_solve(problem, spec, wide.steps(), wide.horizon(), eo);
  std::unique_ptr<Trajectory> spectral;
  if (spec.p == 2.0)
    spectral = std::make_unique<Trajectory>(spectral_oracle_p2(problem, spec, wide.steps(), wide.horizon()));
  const WeakComparison wc = compare_weak(problem.grid, wide, eu.u, spectral.get());
  Csv out(path_in(c, "compare.csv"), "pair,relative_l2");
  out.row("wide_vs_euler", wc.wide_vs_euler);
  if (spectral) {
    out.row("wide_vs_spectral", wc.wide_vs_spectral);
    out.row("euler_vs_spectral", wc.euler_vs_spectral);
  }
  s.manifest.set("regime_p_above_critical", spec.p > 2.0 / (2.0 * spec.s + 1.0));
  s.check("euler_dissipative", eu.dissipative, 0.0);
  if (spectral) {
    s.check("wide_vs_spectral", wc.wide_vs_spectral <= 0.05, 0.05 - wc.wide_vs_spectral);
  } else {
    s.check("wide_vs_euler", wc.wide_vs_euler <= 0.08, 0.08 - wc.wide_vs_euler);
  }
}

void run_mollify(Session& s) {
  const RunConfig& c = s.cfg;
  const ProblemData problem = c.problem();
  const KernelSpec spec = c.kernel_spec();
  const DiscreteEnergy energy(spec, problem.grid);
  const double T = 1.0;
  const std::size_t K = 1024;
  const Trajectory v = smooth_demo_trajectory(problem.grid, problem.u0, K, T);
  const std::vector<double> hs{0.08, 0.04, 0.02, 0.01, 0.005};
  const MollifierTable t = mollifier_convergence(v, hs, energy, spec.p);
  Csv out(path_in(c, "mollifier.csv"),
          "h,lp_gap,l2_gap,energy_gap,bound_margin,residual,jensen_margin");
  double residual = 0.0, bound = INFINITY, jensen = INFINITY;
  for (const auto& r : t.rows) {
    out.row(r.h, r.lp_gap, r.l2_gap, r.energy_gap, r.bound_margin, r.residual, r.jensen_margin);
    residual = std::max(residual, r.residual);
    bound = std::min(bound, r.bound_margin);
    jensen = std::min(jensen, r.jensen_margin);
  }
  s.manifest.set("mollifier.l2_slope", t.l2_slope);
  s.manifest.set("mollifier.energy_slope", t.energy_slope);
  s.check("mollifier.residual", residual <= 1e-12, 1e-12 - residual);
  s.check("mollifier.bound", bound >= 0.0, bound);
  s.check("mollifier.jensen", jensen >= -1e-12, jensen);
  s.check("mollifier.gaps_decreasing", t.gaps_decreasing && t.energy_decreasing, 0.0);
  s.check("mollifier.l2_slope", t.l2_slope >= 0.8 && t.l2_slope <= 1.2,
          0.2 - std::abs(t.l2_slope - 1.0));
  s.check("mollifier.energy_slope", t.energy_slope >= 0.8 && t.energy_slope <= 1.2,
          0.2 - std::abs(t.energy_slope - 1.0));
  s.check("mollifier.final_gap", t.final_gap_small, 0.0);
}

void run_poincare(Session& s) {
  const RunConfig& c = s.cfg;
  if (c.p < 2.0) throw ConfigError("poincare requires p >= 2");
  const SpaceGrid g1 = build_grid(c.R, c.M);
  const SpaceGrid g2 = build_grid(c.R, 2 * c.M);
  const std::size_t iters = 20000;
  const PoincareEstimate e1 = estimate_poincare(g1, c.p, c.s, iters);
  const PoincareEstimate e2 = estimate_poincare(g2, c.p, c.s, iters);
  Csv out(path_in(c, "poincare.csv"), "M,constant,rayleigh,iterations,converged");
  out.row(g1.size(), e1.constant, e1.rayleigh, e1.iterations, e1.converged);
  out.row(g2.size(), e2.constant, e2.rayleigh, e2.iterations, e2.converged);
  const double cauchy = std::abs(e2.constant - e1.constant) / e2.constant;
  s.check("poincare.converged", e1.converged && e2.converged, 0.0);
  s.check("poincare.refinement", cauchy <= 0.02, 0.02 - cauchy);
  if (c.p == 2.0) {
    const std::vector<double> zero(g1.size(), 0.0);
    const HeatSystem hs = assemble_heat_system(g1, zero, c.s);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hs.A, Eigen::EigenvaluesOnly);
    const double ceig = 2.0 / es.eigenvalues()(0);
    const double rel = std::abs(e1.constant - ceig) / ceig;
    s.manifest.set("poincare.eigen_constant", ceig);
    s.check("poincare.eigen", rel <= 1e-3, 1e-3 - rel);
  }
}

}  // namespace

ExitCode run(const RunConfig& config, Subcommand command, std::ostream& log) {
  Session s{config, log, {}};
  try {
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) {
      log << "error: cannot create output directory '" << config.out_dir << "': " << ec.message() << "\n";
      return ExitCode::MissingArtifact;
    }
    s.manifest.set("version", std::string(NLEVO_VERSION));
    s.manifest.set("subcommand", to_string(command));
    s.manifest.set("seed", std::to_string(config.solve.seed));
    for (const auto& [k, v] : config.echo()) s.manifest.set("config." + k, v);
    switch (command) {
      case Subcommand::Solve: run_solve(s); break;
      case Subcommand::Verify: run_verify(s); break;
      case Subcommand::CompareWeak: run_compare(s); break;
      case Subcommand::MollifyDemo: run_mollify(s); break;
      case Subcommand::Poincare: run_poincare(s); break;
    }
    s.manifest.write(path_in(config, "manifest_" + to_string(command) + ".txt"));
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return ExitCode::Config;
  } catch (const IoError& e) {
    log << "error: " << e.what() << "\n";
    return ExitCode::MissingArtifact;
  }
  log << (s.manifest.all_passed() ? "all checks passed" : "some checks failed") << "\n";
  return s.manifest.all_passed() ? ExitCode::Ok : ExitCode::ChecksFailed;
}

}  // namespace nlevo
