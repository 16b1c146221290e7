#include "sfgpi/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sfgpi/errors.hpp"

namespace sfgpi {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("bad value for " + key + ": '" + value + "'");
  return out;
}

// Accepts plain integers and scientific shorthand such as 2e6.
std::uint64_t parse_count(const std::string& key, const std::string& value) {
  const double d = parse_number<double>(key, value);
  if (d < 0 || d != static_cast<double>(static_cast<std::uint64_t>(d))) {
    throw ConfigError("bad count for " + key + ": '" + value + "'");
  }
  return static_cast<std::uint64_t>(d);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("bad boolean for " + key + ": '" + value + "'");
}

std::vector<TaskVector> parse_task_list(const std::string& key, const std::string& value) {
  std::vector<TaskVector> out;
  try {
    for (const auto& w : words(value)) out.push_back(parse_task(w));
  } catch (const FormatError& e) {
    throw ConfigError(key + ": " + e.what());
  }
  return out;
}

// "1-10", "1 2 5" or a mix.
std::vector<std::uint64_t> parse_seeds(const std::string& value) {
  std::vector<std::uint64_t> out;
  for (const auto& w : words(value)) {
    const auto dash = w.find('-');
    if (dash != std::string::npos && dash > 0) {
      const auto lo = parse_count("seeds", w.substr(0, dash));
      const auto hi = parse_count("seeds", w.substr(dash + 1));
      if (hi < lo) throw ConfigError("empty seed range '" + w + "'");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    } else {
      out.push_back(parse_count("seeds", w));
    }
  }
  return out;
}

std::string number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  if (quoted) throw FormatError("unterminated quote in CSV row");
  return out;
}

GridConfig desk_grid() {
  GridConfig g;
  g.width = 3;
  g.height = 3;
  g.num_object_types = 4;
  g.instances_per_type = 1;
  g.episode_length = 200;
  g.respawn = true;
  return g;
}

const char* mode_name(ExecutionMode m) {
  switch (m) {
    case ExecutionMode::Sequential: return "sequential";
    case ExecutionMode::Pipeline: return "pipeline";
    case ExecutionMode::Lockstep: return "lockstep";
  }
  return "?";
}

std::vector<std::uint64_t> seeds_for(const ExperimentConfig& config, const CommandOptions& options) {
  if (options.seed) return {*options.seed};
  return config.seeds;
}

RunSetup setup_for(const ExperimentConfig& config, const CommandOptions& options, const StateSpace& space,
                   std::uint64_t seed) {
  RunSetup s;
  s.space = &space;
  s.seed = seed;
  s.unroll = config.unroll;
  s.mode = options.deterministic ? ExecutionMode::Sequential : config.mode;
  s.actors_per_task = config.actors_per_task;
  s.pipeline = config.pipeline;
  return s;
}

Hyperparams phase_hyper(const ExperimentConfig& config, std::uint64_t steps) {
  Hyperparams h = config.hyper;
  h.total_steps = steps;
  h.validate();
  return h;
}

void append_records(std::vector<RunRecord>& out, const RunLog& log, const std::string& run_id, std::uint64_t seed,
                    const std::string& phase, const std::vector<std::string>& task_names) {
  for (const auto& w : log.warnings) std::cerr << "warning: " << run_id << ": " << w << "\n";
  std::size_t k = 0;
  for (const auto& e : log.episodes) {
    RunRecord r;
    r.run_id = run_id;
    r.seed = seed;
    r.phase = phase;
    r.task = task_names.at(task_names.size() == 1 ? 0 : e.task_id);
    r.episode = k++;
    r.env_steps = e.env_steps;
    r.ret = e.ret;
    for (std::size_t p = 0; p < e.selection_counts.size(); ++p) {
      if (e.selection_counts[p] > 0) r.sel_counts.emplace_back(p, e.selection_counts[p]);
    }
    r.sf_loss = e.sf_loss;
    out.push_back(std::move(r));
  }
}

void save_csv(const ExperimentConfig&, const CommandOptions& options, const std::string& name,
              const std::vector<RunRecord>& records) {
  fs::create_directories(options.out_dir);
  const std::string path = (fs::path(options.out_dir) / name).string();
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  write_csv(out, records);
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

std::vector<TaskVector> basis_preset(const std::string& name, std::size_t dim) {
  std::vector<TaskVector> out;
  if (name == "canonical") {
    for (std::size_t j = 0; j < dim; ++j) out.push_back(TaskVector::unit(dim, j));
    return out;
  }
  if (dim != 4) throw ConfigError("basis preset '" + name + "' needs four object types");
  if (name == "prime") {
    for (const char* s : {"1000", "0100", "0011", "1100"}) out.push_back(parse_task(s));
    return out;
  }
  if (name == "double-prime") {
    for (std::size_t j = 0; j < 4; ++j) {
      std::vector<double> w(4, -0.1);
      w[j] = 1.0;
      out.emplace_back(std::move(w));
    }
    return out;
  }
  throw ConfigError("unknown basis preset '" + name + "'");
}

std::vector<TaskVector> default_test_tasks() {
  std::vector<TaskVector> out;
  for (const char* s : {"1100", "0111", "1111", "-1000", "-1-100", "-1100", "-11-10", "-1101", "-11-11"}) {
    out.push_back(parse_task(s));
  }
  return out;
}

void ExperimentConfig::validate() const {
  grid.validate();
  hyper.validate();
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (basis.empty()) throw ConfigError("basis is empty");
  const auto d = static_cast<std::size_t>(grid.num_object_types);
  for (const auto& b : basis) {
    if (b.dim() != d) throw ConfigError("basis task " + format_task(b) + " does not match grid.types");
  }
  for (const auto& t : test_tasks) {
    if (t.dim() != d) throw ConfigError("test task " + format_task(t) + " does not match grid.types");
  }
  if (unroll == 0) throw ConfigError("pipeline.unroll must be positive");
  if (actors_per_task == 0) throw ConfigError("pipeline.actors_per_task must be positive");
  if (oracle.instances == 0 || oracle.max_states < 2 || oracle.max_actions == 0 || oracle.policies == 0) {
    throw ConfigError("oracle suite sizes must be positive");
  }
}

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& v) {
  auto count = [&] { return parse_count(key, v); };
  auto real = [&] { return parse_number<double>(key, v); };
  auto integer = [&] { return static_cast<int>(parse_count(key, v)); };

  if (key == "grid.width") c.grid.width = integer();
  else if (key == "grid.height") c.grid.height = integer();
  else if (key == "grid.types") c.grid.num_object_types = integer();
  else if (key == "grid.instances") c.grid.instances_per_type = integer();
  else if (key == "grid.episode_len") c.grid.episode_length = integer();
  else if (key == "grid.respawn") c.grid.respawn = parse_bool(key, v);
  else if (key == "gamma") c.hyper.gamma = real();
  else if (key == "basis") {
    const auto list = words(v);
    if (list.size() == 1 && (v == "canonical" || v == "prime" || v == "double-prime")) {
      c.basis_name = v;
      c.basis.clear();
    } else {
      c.basis_name = "custom";
      c.basis = parse_task_list(key, v);
    }
  } else if (key == "test_tasks") c.test_tasks = parse_task_list(key, v);
  else if (key == "seeds") c.seeds = parse_seeds(v);
  else if (key == "steps.basis") c.basis_steps = count();
  else if (key == "steps.transfer") c.transfer_steps = count();
  else if (key == "steps.continual") c.continual_steps = count();
  else if (key == "steps.baseline") c.baseline_steps = count();
  else if (key == "hyper.alpha_psi") c.hyper.alpha_psi = real();
  else if (key == "hyper.alpha_w") c.hyper.alpha_w = real();
  else if (key == "hyper.alpha_q") c.hyper.alpha_q = real();
  else if (key == "hyper.alpha_r") c.hyper.alpha_r = real();
  else if (key == "hyper.alpha_decay") c.hyper.alpha_decay = real();
  else if (key == "hyper.lambda") c.hyper.lambda = real();
  else if (key == "hyper.mix_q_loss") c.hyper.mix_q_loss = parse_bool(key, v);
  else if (key == "hyper.q_loss_weight") c.hyper.q_loss_weight = real();
  else if (key == "hyper.sf_loss_weight") c.hyper.sf_loss_weight = real();
  else if (key == "epsilon.start") c.hyper.epsilon.start = real();
  else if (key == "epsilon.end") c.hyper.epsilon.end = real();
  else if (key == "epsilon.decay_steps") c.hyper.epsilon.decay_steps = count();
  else if (key == "pipeline.mode") {
    if (v == "sequential") c.mode = ExecutionMode::Sequential;
    else if (v == "pipeline") c.mode = ExecutionMode::Pipeline;
    else if (v == "lockstep") c.mode = ExecutionMode::Lockstep;
    else throw ConfigError("pipeline.mode must be sequential, pipeline or lockstep");
  } else if (key == "pipeline.actors_per_task") c.actors_per_task = count();
  else if (key == "pipeline.queue_capacity") c.pipeline.queue_capacity = count();
  else if (key == "pipeline.unroll") c.unroll = count();
  else if (key == "pipeline.snapshot_interval") c.pipeline.snapshot_interval = count();
  else if (key == "pipeline.drain") c.pipeline.drain = parse_bool(key, v);
  else if (key == "oracle.instances") c.oracle.instances = count();
  else if (key == "oracle.max_states") c.oracle.max_states = count();
  else if (key == "oracle.max_actions") c.oracle.max_actions = count();
  else if (key == "oracle.policies") c.oracle.policies = count();
  else if (key == "oracle.epsilons") {
    c.oracle.epsilons.clear();
    for (const auto& w : words(v)) c.oracle.epsilons.push_back(parse_number<double>(key, w));
  } else if (key == "oracle.inflate_epsilon") c.oracle.inflate_epsilon = real();
  else if (key == "oracle.seed") c.oracle.seed = count();
  else throw ConfigError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  c.grid = desk_grid();
  c.hyper.epsilon = {0.5, 0.05, 1'000'000};
  bool tests_set = false;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(n) + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (value.empty()) throw ConfigError("line " + std::to_string(n) + ": empty value for " + key);
    apply_setting(c, key, value);
    tests_set = tests_set || key == "test_tasks";
  }
  const auto d = static_cast<std::size_t>(std::max(c.grid.num_object_types, 1));
  if (c.basis.empty()) c.basis = basis_preset(c.basis_name, d);
  if (!tests_set && d == 4) c.test_tasks = default_test_tasks();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_config(in);
}

// ---------------------------------------------------------------------------
// CSV

void write_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << kCsvHeader << "\n";
  for (const auto& r : records) {
    std::string sel;
    for (const auto& [p, n] : r.sel_counts) {
      if (!sel.empty()) sel += ';';
      sel += std::to_string(p) + ":" + std::to_string(n);
    }
    out << csv_field(r.run_id) << ',' << r.seed << ',' << r.phase << ',' << csv_field(r.task) << ',' << r.episode
        << ',' << r.env_steps << ',' << number(r.ret) << ',' << sel << ',' << (r.sf_loss ? number(*r.sf_loss) : "")
        << "\n";
  }
}

std::vector<RunRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader) throw FormatError("CSV header does not match the schema");
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw FormatError("CSV row has " + std::to_string(f.size()) + " fields");
    RunRecord r;
    try {
      r.run_id = f[0];
      r.seed = parse_count("seed", f[1]);
      r.phase = f[2];
      r.task = f[3];
      r.episode = parse_count("episode", f[4]);
      r.env_steps = parse_count("env_steps", f[5]);
      r.ret = parse_number<double>("return", f[6]);
      for (std::size_t pos = 0; pos < f[7].size();) {
        auto end = f[7].find(';', pos);
        if (end == std::string::npos) end = f[7].size();
        const std::string item = f[7].substr(pos, end - pos);
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw FormatError("bad sel_counts entry '" + item + "'");
        r.sel_counts.emplace_back(parse_count("policy", item.substr(0, colon)),
                                  parse_count("count", item.substr(colon + 1)));
        pos = end + 1;
      }
      if (!f[8].empty()) r.sf_loss = parse_number<double>("sf_loss", f[8]);
    } catch (const ConfigError& e) {
      throw FormatError(e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands

std::map<std::string, std::string> environment_metadata(const ExperimentConfig& c) {
  return {
      {"grid.width", std::to_string(c.grid.width)},
      {"grid.height", std::to_string(c.grid.height)},
      {"grid.types", std::to_string(c.grid.num_object_types)},
      {"grid.instances", std::to_string(c.grid.instances_per_type)},
      {"grid.episode_len", std::to_string(c.grid.episode_length)},
      {"grid.respawn", c.grid.respawn ? "true" : "false"},
      {"gamma", number(c.hyper.gamma)},
  };
}

void check_library(const PolicyLibrary& library, const ExperimentConfig& config, std::size_t num_states) {
  library.validate();
  for (const auto& [k, v] : environment_metadata(config)) {
    const auto it = library.metadata.find(k);
    if (it == library.metadata.end()) throw ConfigError("library lacks metadata key " + k);
    if (it->second != v) {
      throw ConfigError("library was built with " + k + " = " + it->second + ", config has " + v);
    }
  }
  if (library.reward_model.num_states() != num_states || library.reward_model.num_actions() != kNumMoves) {
    throw ConfigError("library dimensions do not match the room");
  }
}

std::string library_path(const CommandOptions& options, std::uint64_t seed) {
  const std::string name = "library_" + std::to_string(seed) + ".sfl";
  if (!options.library) return (fs::path(options.out_dir) / name).string();
  if (fs::is_directory(*options.library)) return (fs::path(*options.library) / name).string();
  return *options.library;
}

std::vector<RunRecord> cmd_train_basis(const ExperimentConfig& config, const CommandOptions& options) {
  config.validate();
  const StateSpace space(config.grid);
  const Hyperparams h = phase_hyper(config, config.basis_steps);
  std::vector<std::string> names;
  for (const auto& b : config.basis) names.push_back(format_task(b));
  std::vector<RunRecord> records;
  fs::create_directories(options.out_dir);
  for (const auto seed : seeds_for(config, options)) {
    BasisResult res = algorithm2_run(TaskMatrix(config.basis), setup_for(config, options, space, seed), h);
    res.library.metadata = environment_metadata(config);
    res.library.metadata["basis"] = config.basis_name;
    res.library.metadata["seed"] = std::to_string(seed);
    res.library.metadata["mode"] = mode_name(setup_for(config, options, space, seed).mode);
    save_library((fs::path(options.out_dir) / ("library_" + std::to_string(seed) + ".sfl")).string(), res.library);
    append_records(records, res.run.log, "basis-s" + std::to_string(seed), seed, "basis", names);
  }
  save_csv(config, options, "basis.csv", records);
  return records;
}

std::vector<RunRecord> cmd_transfer(const ExperimentConfig& config, const CommandOptions& options, bool continual) {
  config.validate();
  if (config.test_tasks.empty()) throw ConfigError("no test tasks configured");
  const StateSpace space(config.grid);
  const std::string phase = continual ? "continual" : "transfer";
  const Hyperparams h = phase_hyper(config, continual ? config.continual_steps : config.transfer_steps);
  std::vector<RunRecord> records;
  for (const auto seed : seeds_for(config, options)) {
    auto lib = std::make_shared<PolicyLibrary>(load_library(library_path(options, seed)));
    check_library(*lib, config, space.size());
    std::shared_ptr<const PolicyLibrary> shared = lib;
    for (std::size_t t = 0; t < config.test_tasks.size(); ++t) {
      const TaskVector& w = config.test_tasks[t];
      const TransferResult res = algorithm1_run(shared, w, setup_for(config, options, space, seed), h, continual);
      append_records(records, res.run.log, phase + "-s" + std::to_string(seed) + "-t" + std::to_string(t), seed, phase,
                     {format_task(w)});
    }
  }
  save_csv(config, options, phase + ".csv", records);
  return records;
}

std::vector<RunRecord> cmd_baseline(const ExperimentConfig& config, const CommandOptions& options) {
  config.validate();
  if (config.test_tasks.empty()) throw ConfigError("no test tasks configured");
  const bool random = options.baseline_kind == "random";
  if (!random && options.baseline_kind != "qlambda") throw ConfigError("baseline kind must be qlambda or random");
  const StateSpace space(config.grid);
  const Hyperparams h = phase_hyper(config, config.baseline_steps);
  std::vector<RunRecord> records;
  for (const auto seed : seeds_for(config, options)) {
    for (std::size_t t = 0; t < config.test_tasks.size(); ++t) {
      const TaskVector& w = config.test_tasks[t];
      const RunSetup setup = setup_for(config, options, space, seed);
      const RunLog log = random ? random_run(w, setup, config.baseline_steps).log : qlambda_run(w, setup, h).run.log;
      append_records(records, log, options.baseline_kind + "-s" + std::to_string(seed) + "-t" + std::to_string(t),
                     seed, "baseline", {format_task(w)});
    }
  }
  save_csv(config, options, random ? "baseline_random.csv" : "baseline.csv", records);
  return records;
}

OracleSummary cmd_oracle_check(const ExperimentConfig& config, const CommandOptions& options) {
  config.validate();
  const auto& o = config.oracle;
  OracleSummary sum;
  auto add = [&](const std::string& check, std::uint64_t seed, BoundReport r) {
    // Sabotage swaps the inequality so every honest check must now fail.
    if (options.sabotage) r.holds = !r.holds;
    auto& [held, total] = sum.counts[check];
    held += r.holds ? 1 : 0;
    ++total;
    sum.lines.push_back({check, seed, std::move(r)});
  };
  auto rng_for = [&](std::uint64_t family, std::uint64_t i) {
    std::seed_seq seq{static_cast<std::uint32_t>(o.seed), static_cast<std::uint32_t>(family),
                      static_cast<std::uint32_t>(i)};
    return std::mt19937_64(seq);
  };

  for (std::uint64_t i = 0; i < o.instances; ++i) {
    auto rng = rng_for(1, i);
    const TabularMdp mdp = random_mdp(rng, o.max_states, o.max_actions, 1);
    const RewardTable r = mdp.expected_reward(0);
    std::vector<DeterministicPolicy> pols;
    for (std::size_t k = 0; k < o.policies; ++k) pols.push_back(random_policy(mdp.num_states(), mdp.num_actions(), rng));
    add("gpi_exact", i, check_gpi_theorem(mdp, pols, r, 0.0, Perturbation::None, 0));
    for (const double eps : o.epsilons) {
      add("gpi_uniform", i, check_gpi_theorem(mdp, pols, r, eps, Perturbation::Uniform, rng()));
      add("gpi_adversarial", i, check_gpi_theorem(mdp, pols, r, eps, Perturbation::Adversarial, 0));
    }
    if (o.inflate_epsilon > 0.0) {
      add("gpi_inflated", i, check_gpi_theorem(mdp, pols, r, o.inflate_epsilon, Perturbation::None, 0));
    }
  }

  for (std::uint64_t i = 0; i < o.instances; ++i) {
    auto rng = rng_for(2, i);
    const TabularMdp mdp = random_mdp(rng, o.max_states, o.max_actions, 2);
    const RewardTable ri = mdp.expected_reward(0);
    const RewardTable rj = mdp.expected_reward(1);
    const DeterministicPolicy pi = random_policy(mdp.num_states(), mdp.num_actions(), rng);
    add("lemma1", i, check_lemma1(mdp, ri, rj, pi));
    add("lemma2", i, check_lemma2(mdp, ri, rj));
    RewardTable shifted = ri;
    const double c = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    for (auto& v : shifted.values()) v += c;
    add("lemma1_offset", i, check_lemma1(mdp, ri, shifted, pi));
    add("lemma2_offset", i, check_lemma2(mdp, ri, shifted));
  }

  for (std::uint64_t i = 0; i < o.instances; ++i) {
    auto rng = rng_for(3, i);
    const TabularMdp mdp = random_mdp(rng, o.max_states, o.max_actions, 0);
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    std::vector<RewardTable> basis;
    for (std::size_t k = 0; k < 3; ++k) basis.push_back(random_reward(S, A, rng));
    // Even instances draw the target inside the span, odd ones outside.
    RewardTable target = random_reward(S, A, rng);
    if (i % 2 == 0) {
      std::uniform_real_distribution<double> coef(-1.0, 1.0);
      target = combine(basis, TaskVector({coef(rng), coef(rng), coef(rng)}));
    }
    const double eps = o.epsilons.empty() ? 0.0 : o.epsilons.front();
    add("prop1_reference", i, check_proposition1(mdp, target, basis.front(), basis, eps, Perturbation::Uniform, rng()));
    add("prop1_projected", i, check_proposition1_projected(mdp, target, basis, eps, Perturbation::Uniform, rng()));
    const SweepResult sw = proposition1_sweep(mdp, random_reward(S, A, rng), basis);
    for (const auto& p : sw.points) add("prop1_sweep", i, p.report);
    add("prop1_sweep_continuity", i, sw.continuity);
  }

  sum.all_hold = std::all_of(sum.lines.begin(), sum.lines.end(), [](const OracleLine& l) { return l.report.holds; });

  fs::create_directories(options.out_dir);
  const std::string path = (fs::path(options.out_dir) / "oracle_report.txt").string();
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "# check seed lhs rhs slack holds\n";
  char buf[256];
  for (const auto& l : sum.lines) {
    std::snprintf(buf, sizeof buf, "%s %llu %.12g %.12g %.12g %d\n", l.check.c_str(),
                  static_cast<unsigned long long>(l.seed), l.report.lhs, l.report.rhs, l.report.slack,
                  l.report.holds ? 1 : 0);
    out << buf;
  }
  return sum;
}

std::string cmd_export_mdp(const ExperimentConfig& config, const CommandOptions& options) {
  config.validate();
  std::vector<TaskVector> tasks = config.basis;
  tasks.insert(tasks.end(), config.test_tasks.begin(), config.test_tasks.end());
  const TabularMdp mdp = enumerate_mdp(config.grid, tasks, config.hyper.gamma);
  fs::create_directories(options.out_dir);
  const std::string path = (fs::path(options.out_dir) / "mdp.txt").string();
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  write_mdp(out, mdp);
  return path;
}

}  // namespace sfgpi
