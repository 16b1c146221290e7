#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sfgpi/features.hpp"
#include "sfgpi/mdp.hpp"

namespace sfgpi {

// Successor features psi(s,a) in R^D for one policy. With rewards as
// features, component j is the action-value of the policy on base task j.
class SfTable {
 public:
  SfTable() = default;
  SfTable(std::size_t num_states, std::size_t num_actions, std::size_t dim, std::string policy_id = {});

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::string& policy_id() const noexcept { return policy_id_; }
  void set_policy_id(std::string id) { policy_id_ = std::move(id); }

  std::span<double> at(StateId s, ActionId a) { return {psi_.data() + offset(s, a), dim_}; }
  std::span<const double> at(StateId s, ActionId a) const { return {psi_.data() + offset(s, a), dim_}; }
  double& operator()(StateId s, ActionId a, std::size_t j) { return psi_[offset(s, a) + j]; }
  double operator()(StateId s, ActionId a, std::size_t j) const { return psi_[offset(s, a) + j]; }

  // psi(s,a)^T w
  double q(StateId s, ActionId a, const TaskVector& w) const;
  // Lowest-index argmax_b psi(s,b)^T w.
  ActionId greedy(StateId s, const TaskVector& w) const;
  // Lowest-index argmax_b psi_j(s,b).
  ActionId greedy_component(StateId s, std::size_t j) const;

  QTable component(std::size_t j) const;
  void set_component(std::size_t j, const QTable& q);
  QTable q_table(const TaskVector& w) const;

  std::vector<double>& values() noexcept { return psi_; }
  const std::vector<double>& values() const noexcept { return psi_; }
  bool all_finite() const;
  bool same_shape(const SfTable& o) const noexcept {
    return num_states_ == o.num_states_ && num_actions_ == o.num_actions_ && dim_ == o.dim_;
  }

 private:
  std::size_t offset(StateId s, ActionId a) const {
    return (static_cast<std::size_t>(s) * num_actions_ + static_cast<std::size_t>(a)) * dim_;
  }

  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::size_t dim_ = 0;
  std::string policy_id_;
  std::vector<double> psi_;
};

// Accumulating eligibility traces over (s,a), kept sparse through an active
// list. Entries that decay below kFloor are dropped.
class TraceTable {
 public:
  static constexpr double kFloor = 1e-6;

  TraceTable() = default;
  TraceTable(std::size_t num_states, std::size_t num_actions, double lambda);

  double lambda() const noexcept { return lambda_; }
  bool active() const noexcept { return !active_.empty(); }
  std::size_t active_count() const noexcept { return active_.size(); }

  void accumulate(StateId s, ActionId a, double amount = 1.0);
  void decay(double factor);
  void clear();
  double operator()(StateId s, ActionId a) const {
    return e_[static_cast<std::size_t>(s) * num_actions_ + static_cast<std::size_t>(a)];
  }

  // f(flat_index, trace_value) over every active cell, in insertion order.
  template <class F>
  void for_each(F&& f) const {
    for (auto idx : active_) f(static_cast<std::size_t>(idx), e_[idx]);
  }
  std::size_t num_actions() const noexcept { return num_actions_; }

 private:
  std::size_t num_actions_ = 0;
  double lambda_ = 0.0;
  std::vector<double> e_;
  std::vector<std::uint32_t> active_;
};

// Step sizes alpha * n^-omega, n counting visits of each (s,a) cell. The
// implicit conversion from a scalar gives a constant rate.
class StepSizes {
 public:
  StepSizes(double alpha = 0.1) : alpha_(alpha) {}
  StepSizes(std::size_t num_cells, double alpha, double omega);

  void visit(std::size_t cell) {
    if (!counts_.empty()) ++counts_[cell];
  }
  double at(std::size_t cell) const;
  double base() const noexcept { return alpha_; }

 private:
  double alpha_;
  double omega_ = 0.0;
  std::vector<std::uint32_t> counts_;
};

struct EpsilonSchedule {
  double start = 0.5;
  double end = 0.05;
  std::uint64_t decay_steps = 100'000;

  // Linear from start to end over decay_steps, then flat.
  double at(std::uint64_t step) const noexcept;
};

struct Hyperparams {
  double alpha_psi = 0.1;
  double alpha_w = 0.05;
  double alpha_q = 0.1;
  double alpha_r = 0.5;
  // Per-cell step size alpha * n^-alpha_decay after the n-th visit of (s,a);
  // 0 keeps every rate constant.
  double alpha_decay = 0.0;
  EpsilonSchedule epsilon;
  std::uint64_t total_steps = 200'000;
  double lambda = 0.5;
  double gamma = 0.9;
  // Continual mode: optionally add a direct Q(lambda) loss to the SF loss.
  bool mix_q_loss = false;
  double q_loss_weight = 1.0;
  double sf_loss_weight = 0.1;

  // Throws ConfigError.
  void validate() const;
};

// Psi-tilde plus phi-tilde: the transferable output of basis building.
struct PolicyLibrary {
  std::vector<SfTable> tables;
  RewardModel reward_model;
  TaskMatrix base_tasks;
  // Free-form key/value pairs persisted with the library (environment
  // parameters and the like).
  std::map<std::string, std::string> metadata;

  std::size_t size() const noexcept { return tables.size(); }
  std::size_t dim() const noexcept { return reward_model.num_tasks(); }
  // Appends a table; throws UsageError when its shape differs from the rest.
  void append(SfTable table);
  void validate() const;
};

struct GpiChoice {
  ActionId action = 0;
  std::size_t policy = 0;
  double value = 0.0;
};

// argmax_b max_i psi_i(s,b)^T w; ties go to the lowest (policy, action)
// pair, policy first. Throws UsageError on an empty set or dimension mismatch.
GpiChoice gpi_action(StateId s, std::span<const SfTable* const> tables, const TaskVector& w);
GpiChoice gpi_action(StateId s, const PolicyLibrary& library, const TaskVector& w);
// Same rule with the GPI maximands restricted to one component of psi.
GpiChoice gpi_action_component(StateId s, std::span<const SfTable* const> tables, std::size_t j);

DeterministicPolicy gpi_policy(std::span<const SfTable* const> tables, const TaskVector& w);

double q_from_sf(std::span<const double> psi_sa, const TaskVector& w);

// w += alpha (r - phi^T w) phi
void w_update(TaskVector& w, std::span<const double> phi, double r, double alpha_w);

struct SfTransition {
  StateId state;
  ActionId action;
  StateId next_state;
  // True only for absorbing terminal states; time-limit ends bootstrap.
  bool terminal = false;
};

// One TD(lambda) step on every component of psi:
//   delta_i = phi_i + gamma psi_i(s',a') - psi_i(s,a)
// The trace is cut first when the executed action was off the target
// policy, then (s,a) is accumulated, every traced cell moves by
// alpha(cell) * delta * e, and the trace decays by gamma * lambda.
// `delta_out` receives the D errors. Throws DivergenceError on a
// non-finite result.
void sf_td_update(SfTable& psi, TraceTable& trace, const SfTransition& tr, ActionId a_next,
                  std::span<const double> phi_t, const StepSizes& alpha, double gamma, bool on_policy,
                  std::span<double> delta_out);

// Library artifact: versioned text, 17 significant digits.
void write_library(std::ostream& out, const PolicyLibrary& library);
PolicyLibrary read_library(std::istream& in);
void save_library(const std::string& path, const PolicyLibrary& library);
PolicyLibrary load_library(const std::string& path);

}  // namespace sfgpi
