// nlevo {solve|verify|compare-weak|mollify-demo|poincare} --config <path> [--out <dir>] [--seed <n>]

#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "nlevo/cli_io.hpp"
#include "nlevo/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Nonlocal parabolic solver via weighted space-time minimization"};
  app.set_version_flag("--version", std::string(NLEVO_VERSION));
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;

  std::string command;
  for (const char* name : {"solve", "verify", "compare-weak", "mollify-demo", "poincare"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "run configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides [output] dir)");
    sub->add_option("--seed", seed, "random seed (overrides [solver] seed)");
    sub->callback([&command, name] { command = name; });
  }
  app.require_subcommand(1);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(nlevo::ExitCode::Config);
  }

  try {
    nlevo::RunConfig cfg = nlevo::load_config(config_path);
    if (out_dir) cfg.out_dir = *out_dir;
    if (seed) cfg.solve.seed = *seed;
    return static_cast<int>(nlevo::run(cfg, nlevo::subcommand_from_string(command), std::cout));
  } catch (const nlevo::ConfigError& e) {
    std::cerr << "configuration error:\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v << "\n";
    return static_cast<int>(nlevo::ExitCode::Config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(nlevo::ExitCode::Unexpected);
  }
}
