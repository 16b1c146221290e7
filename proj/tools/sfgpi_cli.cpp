#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "sfgpi/errors.hpp"
#include "sfgpi/harness.hpp"

using namespace sfgpi;

namespace {

int run(const std::string& command, const std::string& config_path, const CommandOptions& opts) {
  std::istringstream defaults;
  const ExperimentConfig config = config_path.empty() ? parse_config(defaults) : load_config(config_path);
  if (command == "train-basis") {
    const auto rows = cmd_train_basis(config, opts);
    std::printf("basis: %zu episodes logged to %s/basis.csv\n", rows.size(), opts.out_dir.c_str());
  } else if (command == "transfer" || command == "continual") {
    const auto rows = cmd_transfer(config, opts, command == "continual");
    std::printf("%s: %zu episodes logged to %s/%s.csv\n", command.c_str(), rows.size(), opts.out_dir.c_str(),
                command.c_str());
  } else if (command == "baseline") {
    const auto rows = cmd_baseline(config, opts);
    std::printf("baseline (%s): %zu episodes logged\n", opts.baseline_kind.c_str(), rows.size());
  } else if (command == "oracle-check") {
    const OracleSummary sum = cmd_oracle_check(config, opts);
    for (const auto& [check, c] : sum.counts) std::printf("%-24s %zu/%zu hold\n", check.c_str(), c.first, c.second);
    std::printf("report: %s/oracle_report.txt\n", opts.out_dir.c_str());
    return sum.all_hold ? kExitOk : kExitOracle;
  } else if (command == "export-mdp") {
    std::printf("%s\n", cmd_export_mdp(config, opts).c_str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Successor features and generalised policy improvement on a gridworld"};
  app.require_subcommand(1, 1);
  // Global flags may follow the subcommand too.
  app.fallthrough();

  std::string config_path;
  CommandOptions opts;
  std::uint64_t seed = 0;
  std::string library;
  app.add_option("--config", config_path, "config file of key = value lines; built-in defaults if omitted");
  auto* seed_opt = app.add_option("--seed", seed, "run this seed only");
  app.add_option("--out", opts.out_dir, "output directory")->capture_default_str();
  app.add_flag("--deterministic", opts.deterministic, "single actor, no threads, reproducible bit for bit");
  auto* lib_opt = app.add_option("--library", library, "library file, or directory of library_<seed>.sfl");

  app.add_subcommand("train-basis", "build the SF library on the base tasks");
  app.add_subcommand("transfer", "GPI over the library with a learned task vector");
  app.add_subcommand("continual", "transfer plus a new SF table learned for the test task");
  auto* base = app.add_subcommand("baseline", "Q(lambda) from scratch, or the uniform random policy");
  base->add_option("--kind", opts.baseline_kind, "qlambda or random")
      ->check(CLI::IsMember({"qlambda", "random"}))
      ->capture_default_str();
  auto* oracle = app.add_subcommand("oracle-check", "verify the GPI and transfer bounds on random MDPs");
  oracle->add_flag("--sabotage", opts.sabotage, "negate every bound; the command must then fail");
  app.add_subcommand("export-mdp", "write the enumerated room as a tabular MDP");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }
  if (*seed_opt) opts.seed = seed;
  if (*lib_opt) opts.library = library;

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, config_path, opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
