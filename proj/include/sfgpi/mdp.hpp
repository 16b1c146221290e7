#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace sfgpi {

using StateId = std::int32_t;
using ActionId = std::int32_t;

// Dense table of scalars indexed [state][action]. Used for action values,
// expected one-step rewards and eligibility traces alike.
class SaTable {
 public:
  SaTable() = default;
  SaTable(std::size_t num_states, std::size_t num_actions, double fill = 0.0)
      : num_states_(num_states),
        num_actions_(num_actions),
        values_(num_states * num_actions, fill) {}

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(std::size_t s, std::size_t a) { return values_[s * num_actions_ + a]; }
  double operator()(std::size_t s, std::size_t a) const { return values_[s * num_actions_ + a]; }

  std::span<double> row(std::size_t s) { return {values_.data() + s * num_actions_, num_actions_}; }
  std::span<const double> row(std::size_t s) const {
    return {values_.data() + s * num_actions_, num_actions_};
  }

  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  bool all_finite() const;
  bool same_shape(const SaTable& other) const noexcept {
    return num_states_ == other.num_states_ && num_actions_ == other.num_actions_;
  }

  friend bool operator==(const SaTable&, const SaTable&) = default;

 private:
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::vector<double> values_;
};

using QTable = SaTable;
using RewardTable = SaTable;

// sup_{s,a} |a(s,a) - b(s,a)|
double sup_distance(const SaTable& a, const SaTable& b);

// Maps every state to one action.
class DeterministicPolicy {
 public:
  DeterministicPolicy() = default;
  explicit DeterministicPolicy(std::vector<ActionId> action_of)
      : action_of_(std::move(action_of)) {}
  DeterministicPolicy(std::size_t num_states, ActionId fill) : action_of_(num_states, fill) {}

  ActionId operator()(StateId s) const { return action_of_[static_cast<std::size_t>(s)]; }
  ActionId& operator[](StateId s) { return action_of_[static_cast<std::size_t>(s)]; }
  std::size_t num_states() const noexcept { return action_of_.size(); }
  const std::vector<ActionId>& actions() const noexcept { return action_of_; }

  // Throws UsageError unless total over num_states with every action < num_actions.
  void validate(std::size_t num_states, std::size_t num_actions) const;

  friend bool operator==(const DeterministicPolicy&, const DeterministicPolicy&) = default;

 private:
  std::vector<ActionId> action_of_;
};

// Finite MDP family sharing (S, A, p, gamma) with K reward tables r_k(s,a,s').
//
// Transitions are stored sparsely: every (s,a) owns a contiguous run of
// outcomes (next state, probability, one reward per reward table). Entries with
// probability 0 are permitted and only matter for serialization.
class TabularMdp {
 public:
  struct Outcome {
    StateId next;
    double prob;
  };

  class Builder;

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  std::size_t num_rewards() const noexcept { return num_rewards_; }
  double gamma() const noexcept { return gamma_; }

  std::span<const Outcome> outcomes(StateId s, ActionId a) const {
    const std::size_t sa = index(s, a);
    return {outcomes_.data() + offsets_[sa], offsets_[sa + 1] - offsets_[sa]};
  }
  // Rewards for the outcomes of (s,a) under reward table k, aligned with outcomes(s,a).
  std::span<const double> rewards(std::size_t k, StateId s, ActionId a) const {
    const std::size_t sa = index(s, a);
    return {rewards_[k].data() + offsets_[sa], offsets_[sa + 1] - offsets_[sa]};
  }

  // p(s'|s,a); linear in the number of outcomes of (s,a).
  double probability(StateId s, ActionId a, StateId next) const;
  // r_k(s,a,s'); 0 when s' is not a listed outcome.
  double reward(std::size_t k, StateId s, ActionId a, StateId next) const;

  // r_k(s,a) = sum_{s'} p(s'|s,a) r_k(s,a,s')
  RewardTable expected_reward(std::size_t k) const;

  // Copy of this MDP with the reward tables replaced. Each table must have
  // num_outcome_entries() values aligned with the internal outcome order.
  TabularMdp with_reward_entries(std::vector<std::vector<double>> rewards) const;
  // Copy with one extra reward table given over (s,a) only, i.e. independent of s'.
  TabularMdp with_added_reward(const RewardTable& r_sa) const;

  std::size_t num_outcome_entries() const noexcept { return outcomes_.size(); }
  const std::vector<double>& reward_entries(std::size_t k) const { return rewards_[k]; }

  // Throws DataError on any invariant violation.
  void validate() const;

 private:
  std::size_t index(StateId s, ActionId a) const {
    return static_cast<std::size_t>(s) * num_actions_ + static_cast<std::size_t>(a);
  }

  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::size_t num_rewards_ = 0;
  double gamma_ = 0.0;
  std::vector<std::size_t> offsets_;  // size S*A + 1
  std::vector<Outcome> outcomes_;
  std::vector<std::vector<double>> rewards_;  // [k][entry]
};

// Accumulates outcomes in any order; build() sorts them by (s, a, s'),
// merges duplicates and validates.
class TabularMdp::Builder {
 public:
  Builder(std::size_t num_states, std::size_t num_actions, std::size_t num_rewards, double gamma);

  // Adds probability mass to (s,a,s'). Repeated calls accumulate.
  Builder& add_transition(StateId s, ActionId a, StateId next, double prob);
  // Sets r_k(s,a,s'); creates a zero-probability outcome if (s,a,s') is unknown.
  Builder& set_reward(std::size_t k, StateId s, ActionId a, StateId next, double value);

  TabularMdp build() const;

 private:
  struct Entry {
    StateId s;
    ActionId a;
    StateId next;
    double prob;
    std::vector<double> rewards;
  };
  Entry& entry(StateId s, ActionId a, StateId next);
  void check_indices(StateId s, ActionId a, StateId next) const;

  std::size_t num_states_;
  std::size_t num_actions_;
  std::size_t num_rewards_;
  double gamma_;
  std::vector<Entry> entries_;
  std::vector<std::vector<std::size_t>> by_sa_;  // entry indices per (s,a)
};

struct SolverOptions {
  double tol = 1e-10;
  std::size_t max_iterations = 1'000'000;
  // Keeps the sup-norm of successive iterates, one entry per sweep.
  bool record_history = false;
};

struct SolveResult {
  QTable q;
  std::size_t iterations = 0;
  // Bound on the sup-norm distance to the true fixed point at exit.
  double error_bound = 0.0;
  std::vector<double> history;
};

// Q^pi for the given expected-reward table, by synchronous sweeps.
SolveResult evaluate_policy(const TabularMdp& mdp, const DeterministicPolicy& policy,
                            const RewardTable& reward, const SolverOptions& options = {});
QTable evaluate_policy_exact(const TabularMdp& mdp, const DeterministicPolicy& policy,
                             std::size_t reward_id, const SolverOptions& options = {});

// Q* for the given expected-reward table.
SolveResult solve_optimal(const TabularMdp& mdp, const RewardTable& reward,
                          const SolverOptions& options = {});
QTable value_iteration(const TabularMdp& mdp, std::size_t reward_id,
                       const SolverOptions& options = {});

// Lowest-index argmax of a row.
ActionId argmax(std::span<const double> row);
DeterministicPolicy greedy_policy(const QTable& q);

// sup_{s,a} |(T^pi Q)(s,a) - Q(s,a)|
double bellman_residual(const TabularMdp& mdp, const DeterministicPolicy& policy,
                        const RewardTable& reward, const QTable& q);
// sup_{s,a} |(T* Q)(s,a) - Q(s,a)|
double optimality_residual(const TabularMdp& mdp, const RewardTable& reward, const QTable& q);

// Plain-text interchange format:
//   mdp <S> <A> <K> <gamma>
//   p <s> <a> <s'> <prob>
//   r <k> <s> <a> <s'> <val>
// Lines starting with '#' and blank lines are ignored. Values are written with
// 17 significant digits so doubles round-trip exactly.
void write_mdp(std::ostream& out, const TabularMdp& mdp);
TabularMdp read_mdp(std::istream& in);

}  // namespace sfgpi
