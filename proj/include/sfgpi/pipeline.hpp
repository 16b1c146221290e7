#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sfgpi/features.hpp"
#include "sfgpi/gridworld.hpp"
#include "sfgpi/sf.hpp"

namespace sfgpi {

struct TrajectoryStep {
  StateId state = 0;
  ActionId action = 0;
  double reward = 0.0;
  StateId next_state = 0;
  bool done = false;     // episode ended with this step (time limit)
  bool padding = false;  // filler after an early end; carries no data
  bool exploratory = false;
  int policy_id = -1;  // GPI policy that chose the action, -1 when exploratory
  std::uint64_t seq = 0;           // per-actor step counter
  std::uint64_t global_index = 0;  // position in the shared step budget
};

// Fixed-length unroll from one actor. Padding steps follow the last real
// step when an episode or the budget ends early.
struct Trajectory {
  std::uint32_t actor_id = 0;
  std::uint64_t snapshot_version = 0;
  std::uint32_t task_id = 0;
  std::size_t feature_dim = 0;
  std::vector<TrajectoryStep> steps;
  std::vector<double> features;  // [step][feature_dim]

  std::span<const double> feature(std::size_t i) const {
    return {features.data() + i * feature_dim, feature_dim};
  }
  std::size_t valid_steps() const noexcept;
};

struct Decision {
  ActionId action = 0;
  int policy = -1;
};

// Greedy part of an actor's behaviour. Snapshots handed to actors never
// change after publication.
class BehaviorPolicy {
 public:
  virtual ~BehaviorPolicy() = default;
  virtual Decision decide(StateId s, std::size_t task_id) const = 0;
};

struct EpisodeRecord {
  std::uint32_t actor_id = 0;
  std::size_t task_id = 0;
  std::uint64_t episode = 0;    // completion order within the run
  std::uint64_t env_steps = 0;  // transitions consumed when the episode ended
  double ret = 0.0;
  std::vector<std::uint64_t> selection_counts;  // greedy steps per GPI policy
  std::optional<double> sf_loss;                // mean squared SF TD error
};

struct RunLog {
  std::vector<EpisodeRecord> episodes;
  std::uint64_t consumed_steps = 0;
  std::vector<std::string> warnings;
};

// Single-writer learner. Subclasses implement the per-transition update;
// the base keeps episode returns, selection counts and the run log.
class Learner {
 public:
  Learner(std::size_t num_states, std::size_t num_actions, std::size_t num_policies, std::size_t num_actors);
  virtual ~Learner() = default;

  // copy=false may alias live parameters and is valid only until the next
  // consume(); copy=true is an independent immutable snapshot.
  virtual std::shared_ptr<const BehaviorPolicy> snapshot(bool copy) const = 0;

  void consume(const Trajectory& trajectory);
  const RunLog& log() const noexcept { return log_; }
  RunLog& log() noexcept { return log_; }
  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  std::size_t num_actors() const noexcept { return num_actors_; }

 protected:
  // Returns the step's squared SF error when one is tracked.
  virtual std::optional<double> learn(const TrajectoryStep& step, std::span<const double> feature,
                                      std::uint32_t actor, std::size_t task) = 0;
  virtual void end_episode(std::uint32_t actor) = 0;
  void set_num_policies(std::size_t n);

 private:
  struct Running {
    double ret = 0.0;
    std::vector<std::uint64_t> counts;
    double loss_sum = 0.0;
    std::size_t loss_n = 0;
    std::size_t task = 0;
  };

  std::size_t num_states_;
  std::size_t num_actions_;
  std::size_t num_policies_;
  std::size_t num_actors_;
  std::vector<Running> running_;
  RunLog log_;
};

// Shared step budget. Actors reserve contiguous index ranges, so the union
// of reservations is exactly [0, total).
class StepBudget {
 public:
  explicit StepBudget(std::uint64_t total) : total_(total) {}
  // Returns [first, first + count); count 0 once the budget is spent.
  std::pair<std::uint64_t, std::uint64_t> reserve(std::uint64_t wanted);
  std::uint64_t total() const noexcept { return total_; }
  std::uint64_t reserved() const noexcept { return next_.load(); }

 private:
  std::uint64_t total_;
  std::atomic<std::uint64_t> next_{0};
};

enum class TaskSchedule { RoundRobin, Pinned };

struct ActorConfig {
  GridConfig grid;
  std::vector<TaskVector> tasks;  // environment reward per task id
  TaskSchedule schedule = TaskSchedule::RoundRobin;
  std::size_t pinned_task = 0;
  std::size_t unroll = 20;
  EpsilonSchedule epsilon;
  std::uint64_t seed = 0;
  std::uint32_t actor_id = 0;
};

class Actor {
 public:
  Actor(ActorConfig config, const StateSpace& space);

  // Fills `out` with the next unroll; false once the budget is exhausted.
  bool collect(const BehaviorPolicy& behavior, std::uint64_t snapshot_version, StepBudget& budget,
               Trajectory& out);
  const ActorConfig& config() const noexcept { return config_; }

 private:
  void begin_episode();

  ActorConfig config_;
  const StateSpace& space_;
  GridWorld env_;
  std::mt19937_64 rng_;
  bool in_episode_ = false;
  std::size_t task_ = 0;
  std::uint64_t episodes_ = 0;
  std::uint64_t seq_ = 0;
  StateId state_ = 0;
};

// Deterministic per-actor seed derived from the run seed.
std::uint64_t actor_seed(std::uint64_t run_seed, std::uint32_t actor_id);

// Reference driver: one actor, collection and learning alternate in the
// calling thread, the actor always acting on the current parameters.
void run_sequential(Learner& learner, const ActorConfig& actor, const StateSpace& space, std::uint64_t budget);

// Bounded FIFO with blocking push/pop. close() wakes every waiter; push
// then fails and pop drains what is left before returning nullopt.
template <class T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  bool push(T item) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    max_size_ = std::max(max_size_, items_.size());
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_full_.notify_all();
    not_empty_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }
  std::size_t max_size() const {
    std::lock_guard lock(mu_);
    return max_size_;
  }
  std::size_t capacity() const noexcept { return capacity_; }

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  std::size_t max_size_ = 0;
  bool closed_ = false;
};

struct PipelineConfig {
  std::size_t queue_capacity = 16;
  // Consumed trajectories between snapshot publications.
  std::size_t snapshot_interval = 100;
  // Actor waits for a fresh snapshot after every trajectory: with one actor
  // and capacity 1 this reproduces run_sequential exactly.
  bool lockstep = false;
  // On shutdown consume what is still queued (true) or drop it (false).
  bool drain = true;

  void validate(std::size_t num_actors) const;
};

struct PipelineStats {
  std::uint64_t consumed_trajectories = 0;
  std::uint64_t consumed_steps = 0;
  std::uint64_t discarded_steps = 0;
  std::size_t max_queue_occupancy = 0;
  std::uint64_t snapshots_published = 0;
  // Every budget index seen exactly once and per-actor order preserved.
  bool audit_ok = false;
  std::uint64_t duplicate_steps = 0;
  std::uint64_t missing_steps = 0;
  std::uint64_t out_of_order = 0;
};

// Actors in their own threads feed the learner, which runs in the calling
// thread. A learner exception stops every actor and is rethrown.
PipelineStats run_pipeline(Learner& learner, const std::vector<ActorConfig>& actors, const StateSpace& space,
                           std::uint64_t budget, const PipelineConfig& config);

}  // namespace sfgpi
