#include "sfgpi/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sfgpi/errors.hpp"

namespace sfgpi {

bool SaTable::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double sup_distance(const SaTable& a, const SaTable& b) {
  if (!a.same_shape(b)) throw UsageError("sup_distance: table shapes differ");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
  return d;
}

void DeterministicPolicy::validate(std::size_t num_states, std::size_t num_actions) const {
  if (action_of_.size() != num_states) {
    throw UsageError("policy covers " + std::to_string(action_of_.size()) + " states, MDP has " +
                     std::to_string(num_states));
  }
  for (ActionId a : action_of_) {
    if (a < 0 || static_cast<std::size_t>(a) >= num_actions) {
      throw UsageError("policy action " + std::to_string(a) + " out of range");
    }
  }
}

// ---------------------------------------------------------------------------
// TabularMdp

double TabularMdp::probability(StateId s, ActionId a, StateId next) const {
  double p = 0.0;
  for (const Outcome& o : outcomes(s, a)) {
    if (o.next == next) p += o.prob;
  }
  return p;
}

double TabularMdp::reward(std::size_t k, StateId s, ActionId a, StateId next) const {
  auto outs = outcomes(s, a);
  auto rs = rewards(k, s, a);
  for (std::size_t i = 0; i < outs.size(); ++i) {
    if (outs[i].next == next) return rs[i];
  }
  return 0.0;
}

RewardTable TabularMdp::expected_reward(std::size_t k) const {
  if (k >= num_rewards_) throw UsageError("reward id " + std::to_string(k) + " out of range");
  RewardTable r(num_states_, num_actions_);
  for (std::size_t s = 0; s < num_states_; ++s) {
    for (std::size_t a = 0; a < num_actions_; ++a) {
      auto outs = outcomes(static_cast<StateId>(s), static_cast<ActionId>(a));
      auto rs = rewards(k, static_cast<StateId>(s), static_cast<ActionId>(a));
      double acc = 0.0;
      for (std::size_t i = 0; i < outs.size(); ++i) acc += outs[i].prob * rs[i];
      r(s, a) = acc;
    }
  }
  return r;
}

TabularMdp TabularMdp::with_reward_entries(std::vector<std::vector<double>> rewards) const {
  for (const auto& table : rewards) {
    if (table.size() != outcomes_.size()) throw UsageError("reward entry count mismatch");
  }
  TabularMdp copy = *this;
  copy.num_rewards_ = rewards.size();
  copy.rewards_ = std::move(rewards);
  return copy;
}

TabularMdp TabularMdp::with_added_reward(const RewardTable& r_sa) const {
  if (r_sa.num_states() != num_states_ || r_sa.num_actions() != num_actions_) {
    throw UsageError("with_added_reward: table shape mismatch");
  }
  std::vector<double> entries(outcomes_.size());
  for (std::size_t sa = 0; sa + 1 < offsets_.size(); ++sa) {
    const double v = r_sa.values()[sa];
    for (std::size_t e = offsets_[sa]; e < offsets_[sa + 1]; ++e) entries[e] = v;
  }
  TabularMdp copy = *this;
  copy.rewards_.push_back(std::move(entries));
  copy.num_rewards_ = copy.rewards_.size();
  return copy;
}

void TabularMdp::validate() const {
  if (num_states_ == 0 || num_actions_ == 0) throw DataError("MDP needs at least one state and action");
  if (!(gamma_ >= 0.0 && gamma_ < 1.0)) throw DataError("gamma must lie in [0,1)");
  for (std::size_t s = 0; s < num_states_; ++s) {
    for (std::size_t a = 0; a < num_actions_; ++a) {
      double total = 0.0;
      for (const Outcome& o : outcomes(static_cast<StateId>(s), static_cast<ActionId>(a))) {
        if (!(o.prob >= 0.0) || !std::isfinite(o.prob)) {
          throw DataError("negative or non-finite probability at s=" + std::to_string(s) +
                          " a=" + std::to_string(a));
        }
        total += o.prob;
      }
      if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "transition mass at s=" << s << " a=" << a << " is " << total;
        throw DataError(msg.str());
      }
    }
  }
  for (const auto& table : rewards_) {
    for (double v : table) {
      if (!std::isfinite(v)) throw DataError("non-finite reward entry");
    }
  }
}

// ---------------------------------------------------------------------------
// Builder

TabularMdp::Builder::Builder(std::size_t num_states, std::size_t num_actions,
                             std::size_t num_rewards, double gamma)
    : num_states_(num_states),
      num_actions_(num_actions),
      num_rewards_(num_rewards),
      gamma_(gamma),
      by_sa_(num_states * num_actions) {
  if (num_states == 0 || num_actions == 0) throw DataError("MDP needs at least one state and action");
}

void TabularMdp::Builder::check_indices(StateId s, ActionId a, StateId next) const {
  if (s < 0 || static_cast<std::size_t>(s) >= num_states_ || next < 0 ||
      static_cast<std::size_t>(next) >= num_states_) {
    throw UsageError("state index out of range");
  }
  if (a < 0 || static_cast<std::size_t>(a) >= num_actions_) throw UsageError("action index out of range");
}

TabularMdp::Builder::Entry& TabularMdp::Builder::entry(StateId s, ActionId a, StateId next) {
  check_indices(s, a, next);
  auto& list = by_sa_[static_cast<std::size_t>(s) * num_actions_ + static_cast<std::size_t>(a)];
  for (std::size_t idx : list) {
    if (entries_[idx].next == next) return entries_[idx];
  }
  list.push_back(entries_.size());
  entries_.push_back(Entry{s, a, next, 0.0, std::vector<double>(num_rewards_, 0.0)});
  return entries_.back();
}

TabularMdp::Builder& TabularMdp::Builder::add_transition(StateId s, ActionId a, StateId next,
                                                         double prob) {
  entry(s, a, next).prob += prob;
  return *this;
}

TabularMdp::Builder& TabularMdp::Builder::set_reward(std::size_t k, StateId s, ActionId a,
                                                     StateId next, double value) {
  if (k >= num_rewards_) throw UsageError("reward id out of range");
  entry(s, a, next).rewards[k] = value;
  return *this;
}

TabularMdp TabularMdp::Builder::build() const {
  TabularMdp mdp;
  mdp.num_states_ = num_states_;
  mdp.num_actions_ = num_actions_;
  mdp.num_rewards_ = num_rewards_;
  mdp.gamma_ = gamma_;
  mdp.offsets_.assign(num_states_ * num_actions_ + 1, 0);
  mdp.outcomes_.reserve(entries_.size());
  mdp.rewards_.assign(num_rewards_, {});
  for (auto& table : mdp.rewards_) table.reserve(entries_.size());

  for (std::size_t sa = 0; sa < by_sa_.size(); ++sa) {
    std::vector<std::size_t> order = by_sa_[sa];
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return entries_[x].next < entries_[y].next; });
    for (std::size_t idx : order) {
      const Entry& e = entries_[idx];
      mdp.outcomes_.push_back(Outcome{e.next, e.prob});
      for (std::size_t k = 0; k < num_rewards_; ++k) mdp.rewards_[k].push_back(e.rewards[k]);
    }
    mdp.offsets_[sa + 1] = mdp.outcomes_.size();
  }
  mdp.validate();
  return mdp;
}

// ---------------------------------------------------------------------------
// Solvers

namespace {

void check_reward_shape(const TabularMdp& mdp, const RewardTable& reward) {
  if (reward.num_states() != mdp.num_states() || reward.num_actions() != mdp.num_actions()) {
    throw UsageError("reward table shape does not match the MDP");
  }
}

// Successive-iterate threshold that guarantees ||Q_k - Q_fix|| <= tol and a
// Bellman residual <= tol.
double stopping_threshold(double gamma, double tol) {
  if (gamma == 0.0) return tol;
  return tol * std::min(1.0, (1.0 - gamma) / gamma);
}

// Synchronous (Jacobi) sweeps of `backup`; `begin_sweep` sees the previous iterate first.
template <class BeginSweep, class Backup>
SolveResult fixed_point(const TabularMdp& mdp, const SolverOptions& options, const char* name,
                        BeginSweep begin_sweep, Backup backup) {
  if (!(options.tol > 0.0)) throw UsageError(std::string(name) + ": tol must be positive");
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  const double gamma = mdp.gamma();
  const double threshold = stopping_threshold(gamma, options.tol);

  SolveResult result;
  QTable current(S, A);
  QTable next(S, A);
  double diff = 0.0;
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    diff = 0.0;
    begin_sweep(current);
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        const double v = backup(current, static_cast<StateId>(s), static_cast<ActionId>(a));
        next(s, a) = v;
        diff = std::max(diff, std::abs(v - current(s, a)));
      }
    }
    std::swap(current, next);
    if (options.record_history) result.history.push_back(diff);
    if (diff <= threshold) {
      result.iterations = it;
      result.error_bound = gamma == 0.0 ? 0.0 : diff * gamma / (1.0 - gamma);
      result.q = std::move(current);
      return result;
    }
  }
  std::ostringstream msg;
  msg << name << " did not converge in " << options.max_iterations
      << " sweeps; last successive-iterate residual " << diff;
  throw SolverError(msg.str(), diff);
}

}  // namespace

SolveResult evaluate_policy(const TabularMdp& mdp, const DeterministicPolicy& policy,
                            const RewardTable& reward, const SolverOptions& options) {
  check_reward_shape(mdp, reward);
  policy.validate(mdp.num_states(), mdp.num_actions());
  const double gamma = mdp.gamma();
  return fixed_point(mdp, options, "policy evaluation", [](const QTable&) {},
                     [&](const QTable& q, StateId s, ActionId a) {
                       double acc = 0.0;
                       for (const auto& o : mdp.outcomes(s, a)) acc += o.prob * q(o.next, policy(o.next));
                       return reward(s, a) + gamma * acc;
                     });
}

QTable evaluate_policy_exact(const TabularMdp& mdp, const DeterministicPolicy& policy,
                             std::size_t reward_id, const SolverOptions& options) {
  return evaluate_policy(mdp, policy, mdp.expected_reward(reward_id), options).q;
}

SolveResult solve_optimal(const TabularMdp& mdp, const RewardTable& reward,
                          const SolverOptions& options) {
  check_reward_shape(mdp, reward);
  const double gamma = mdp.gamma();
  std::vector<double> vmax(mdp.num_states(), 0.0);
  auto refresh_max = [&](const QTable& q) {
    for (std::size_t x = 0; x < mdp.num_states(); ++x) {
      auto row = q.row(x);
      vmax[x] = *std::max_element(row.begin(), row.end());
    }
  };
  return fixed_point(mdp, options, "value iteration", refresh_max, [&](const QTable&, StateId s, ActionId a) {
    double acc = 0.0;
    for (const auto& o : mdp.outcomes(s, a)) acc += o.prob * vmax[static_cast<std::size_t>(o.next)];
    return reward(s, a) + gamma * acc;
  });
}

QTable value_iteration(const TabularMdp& mdp, std::size_t reward_id, const SolverOptions& options) {
  return solve_optimal(mdp, mdp.expected_reward(reward_id), options).q;
}

ActionId argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < row.size(); ++a) {
    if (row[a] > row[best]) best = a;
  }
  return static_cast<ActionId>(best);
}

DeterministicPolicy greedy_policy(const QTable& q) {
  std::vector<ActionId> actions(q.num_states());
  for (std::size_t s = 0; s < q.num_states(); ++s) actions[s] = argmax(q.row(s));
  return DeterministicPolicy(std::move(actions));
}

double bellman_residual(const TabularMdp& mdp, const DeterministicPolicy& policy,
                        const RewardTable& reward, const QTable& q) {
  double res = 0.0;
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      double acc = 0.0;
      for (const auto& o : mdp.outcomes(static_cast<StateId>(s), static_cast<ActionId>(a))) {
        acc += o.prob * q(o.next, policy(o.next));
      }
      res = std::max(res, std::abs(reward(s, a) + mdp.gamma() * acc - q(s, a)));
    }
  }
  return res;
}

double optimality_residual(const TabularMdp& mdp, const RewardTable& reward, const QTable& q) {
  return bellman_residual(mdp, greedy_policy(q), reward, q);
}

}  // namespace sfgpi
