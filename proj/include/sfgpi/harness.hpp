#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sfgpi/algorithms.hpp"
#include "sfgpi/bounds.hpp"

namespace sfgpi {

// Everything a run needs, read from `key = value` lines. Keys are listed in
// the README; unknown keys are a ConfigError.
struct ExperimentConfig {
  GridConfig grid;
  std::string basis_name = "canonical";
  std::vector<TaskVector> basis;
  std::vector<TaskVector> test_tasks;
  std::vector<std::uint64_t> seeds{1};
  Hyperparams hyper;

  std::uint64_t basis_steps = 2'000'000;
  std::uint64_t transfer_steps = 20'000;
  std::uint64_t continual_steps = 2'000'000;
  std::uint64_t baseline_steps = 20'000;

  ExecutionMode mode = ExecutionMode::Pipeline;
  std::size_t actors_per_task = 2;
  std::size_t unroll = 20;
  PipelineConfig pipeline;

  struct Oracle {
    std::size_t instances = 100;
    std::size_t max_states = 20;
    std::size_t max_actions = 4;
    std::size_t policies = 3;
    std::vector<double> epsilons{0.01, 0.1};
    // Bound evaluated with this epsilon while the values stay exact (0: off).
    double inflate_epsilon = 0.0;
    std::uint64_t seed = 1;
  } oracle;

  // Throws ConfigError.
  void validate() const;
};

// Named presets: canonical, prime, double-prime (four object types).
std::vector<TaskVector> basis_preset(const std::string& name, std::size_t dim);
// The nine standard test tasks.
std::vector<TaskVector> default_test_tasks();

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
// Applies one `key = value` assignment.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

struct RunRecord {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string phase;  // basis | transfer | continual | baseline
  std::string task;
  std::size_t episode = 0;
  std::uint64_t env_steps = 0;
  double ret = 0.0;
  std::vector<std::pair<std::size_t, std::uint64_t>> sel_counts;
  std::optional<double> sf_loss;
};

inline constexpr const char* kCsvHeader = "run_id,seed,phase,task,episode,env_steps,return,sel_counts,sf_loss";

void write_csv(std::ostream& out, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_csv(std::istream& in);

struct CommandOptions {
  std::string out_dir = ".";
  // Library file, or directory holding library_<seed>.sfl.
  std::optional<std::string> library;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  // oracle-check: negate every bound so that the harness must fail.
  bool sabotage = false;
  // baseline: qlambda or random.
  std::string baseline_kind = "qlambda";
};

std::string library_path(const CommandOptions& options, std::uint64_t seed);

// Each command writes <out>/<phase>.csv and returns the rows it wrote.
std::vector<RunRecord> cmd_train_basis(const ExperimentConfig& config, const CommandOptions& options);
std::vector<RunRecord> cmd_transfer(const ExperimentConfig& config, const CommandOptions& options, bool continual);
std::vector<RunRecord> cmd_baseline(const ExperimentConfig& config, const CommandOptions& options);

struct OracleLine {
  std::string check;
  std::uint64_t seed = 0;
  BoundReport report;
};

struct OracleSummary {
  std::vector<OracleLine> lines;
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // check -> (held, total)
  bool all_hold = false;
};

// Runs the bound suite and writes <out>/oracle_report.txt.
OracleSummary cmd_oracle_check(const ExperimentConfig& config, const CommandOptions& options);
// Writes the enumerated room (basis tasks then test tasks as reward tables)
// to <out>/mdp.txt and returns the path.
std::string cmd_export_mdp(const ExperimentConfig& config, const CommandOptions& options);

// Library metadata describing the environment it was trained in.
std::map<std::string, std::string> environment_metadata(const ExperimentConfig& config);
// Throws ConfigError when `library` was not built for `config`'s room.
void check_library(const PolicyLibrary& library, const ExperimentConfig& config, std::size_t num_states);

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitOracle = 3;

}  // namespace sfgpi
