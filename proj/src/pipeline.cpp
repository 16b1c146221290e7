#include "sfgpi/pipeline.hpp"

#include <algorithm>
#include <exception>
#include <thread>

#include "sfgpi/errors.hpp"

namespace sfgpi {

std::size_t Trajectory::valid_steps() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(steps.begin(), steps.end(), [](const TrajectoryStep& s) { return !s.padding; }));
}

// ---------------------------------------------------------------------------

Learner::Learner(std::size_t num_states, std::size_t num_actions, std::size_t num_policies,
                 std::size_t num_actors)
    : num_states_(num_states),
      num_actions_(num_actions),
      num_policies_(num_policies),
      num_actors_(num_actors),
      running_(num_actors) {
  if (num_actors == 0) throw ConfigError("learner needs at least one actor");
  for (auto& r : running_) r.counts.assign(num_policies_, 0);
}

void Learner::set_num_policies(std::size_t n) {
  num_policies_ = n;
  for (auto& r : running_) r.counts.resize(n, 0);
}

void Learner::consume(const Trajectory& trajectory) {
  if (trajectory.actor_id >= num_actors_) throw UsageError("trajectory from an unknown actor");
  Running& run = running_[trajectory.actor_id];
  for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
    const TrajectoryStep& step = trajectory.steps[i];
    if (step.padding) continue;
    run.task = trajectory.task_id;
    const auto loss = learn(step, trajectory.feature(i), trajectory.actor_id, trajectory.task_id);
    ++log_.consumed_steps;
    run.ret += step.reward;
    if (step.policy_id >= 0 && static_cast<std::size_t>(step.policy_id) < run.counts.size()) {
      ++run.counts[static_cast<std::size_t>(step.policy_id)];
    }
    if (loss) {
      run.loss_sum += *loss;
      ++run.loss_n;
    }
    if (step.done) {
      EpisodeRecord rec;
      rec.actor_id = trajectory.actor_id;
      rec.task_id = run.task;
      rec.episode = log_.episodes.size();
      rec.env_steps = log_.consumed_steps;
      rec.ret = run.ret;
      rec.selection_counts = run.counts;
      if (run.loss_n > 0) rec.sf_loss = run.loss_sum / static_cast<double>(run.loss_n);
      log_.episodes.push_back(std::move(rec));
      run.ret = 0.0;
      std::fill(run.counts.begin(), run.counts.end(), 0);
      run.loss_sum = 0.0;
      run.loss_n = 0;
      end_episode(trajectory.actor_id);
    }
  }
}

// ---------------------------------------------------------------------------

std::pair<std::uint64_t, std::uint64_t> StepBudget::reserve(std::uint64_t wanted) {
  std::uint64_t cur = next_.load();
  for (;;) {
    if (cur >= total_) return {total_, 0};
    const std::uint64_t n = std::min(wanted, total_ - cur);
    if (next_.compare_exchange_weak(cur, cur + n)) return {cur, n};
  }
}

std::uint64_t actor_seed(std::uint64_t run_seed, std::uint32_t actor_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(run_seed), static_cast<std::uint32_t>(run_seed >> 32), actor_id,
                    0x5f3759dfu};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

namespace {

TaskVector first_task(const ActorConfig& config) {
  if (config.tasks.empty()) throw ConfigError("actor needs at least one task");
  return config.tasks.front();
}

}  // namespace

Actor::Actor(ActorConfig config, const StateSpace& space)
    : config_(std::move(config)), space_(space), env_(config_.grid, first_task(config_)), rng_(config_.seed) {
  if (config_.unroll == 0) throw ConfigError("unroll must be positive");
  if (config_.schedule == TaskSchedule::Pinned && config_.pinned_task >= config_.tasks.size()) {
    throw ConfigError("pinned task id out of range");
  }
  if (!(config_.grid == space_.config())) throw ConfigError("actor grid differs from the state space grid");
}

void Actor::begin_episode() {
  task_ = config_.schedule == TaskSchedule::Pinned
              ? config_.pinned_task
              : static_cast<std::size_t>((episodes_ + config_.actor_id) % config_.tasks.size());
  env_.set_task(config_.tasks[task_]);
  const GridState& s = env_.reset(rng_());
  state_ = space_.index_of(s);
  ++episodes_;
  in_episode_ = true;
}

bool Actor::collect(const BehaviorPolicy& behavior, std::uint64_t snapshot_version, StepBudget& budget,
                    Trajectory& out) {
  if (!in_episode_) begin_episode();
  const std::uint64_t left =
      static_cast<std::uint64_t>(config_.grid.episode_length - env_.state().steps_elapsed);
  const auto [first, count] = budget.reserve(std::min<std::uint64_t>(config_.unroll, left));
  if (count == 0) return false;

  const std::size_t D = static_cast<std::size_t>(config_.grid.num_object_types);
  out.actor_id = config_.actor_id;
  out.snapshot_version = snapshot_version;
  out.task_id = static_cast<std::uint32_t>(task_);
  out.feature_dim = D;
  out.steps.assign(config_.unroll, TrajectoryStep{});
  out.features.assign(config_.unroll * D, 0.0);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<ActionId> any_action(0, static_cast<ActionId>(kNumMoves) - 1);
  for (std::uint64_t i = 0; i < count; ++i) {
    TrajectoryStep& st = out.steps[i];
    st.state = state_;
    st.global_index = first + i;
    st.seq = seq_++;
    const double eps = config_.epsilon.at(first + i);
    if (unit(rng_) < eps) {
      st.exploratory = true;
      st.action = any_action(rng_);
    } else {
      const Decision d = behavior.decide(state_, task_);
      st.action = d.action;
      st.policy_id = d.policy;
    }
    TransitionOutcome o = env_.step(st.action);
    st.reward = o.reward;
    st.next_state = space_.index_of(o.next_state);
    st.done = o.done;
    std::copy(o.feature.begin(), o.feature.end(), out.features.begin() + static_cast<std::ptrdiff_t>(i * D));
    state_ = st.next_state;
  }
  for (std::size_t i = count; i < config_.unroll; ++i) out.steps[i].padding = true;
  if (env_.done()) in_episode_ = false;
  return true;
}

void run_sequential(Learner& learner, const ActorConfig& actor_config, const StateSpace& space,
                    std::uint64_t budget_steps) {
  Actor actor(actor_config, space);
  StepBudget budget(budget_steps);
  Trajectory traj;
  std::uint64_t version = 0;
  for (;;) {
    auto view = learner.snapshot(false);
    if (!actor.collect(*view, version++, budget, traj)) break;
    learner.consume(traj);
  }
}

// ---------------------------------------------------------------------------

void PipelineConfig::validate(std::size_t num_actors) const {
  if (num_actors == 0) throw ConfigError("pipeline needs at least one actor");
  if (queue_capacity < num_actors) throw ConfigError("queue capacity must be at least the number of actors");
  if (snapshot_interval == 0) throw ConfigError("snapshot interval must be positive");
  if (lockstep && num_actors != 1) throw ConfigError("lockstep mode runs exactly one actor");
}

namespace {

class SnapshotBoard {
 public:
  void publish(std::shared_ptr<const BehaviorPolicy> p) {
    std::lock_guard lock(mu_);
    current_ = std::move(p);
    ++version_;
    cv_.notify_all();
  }
  std::pair<std::shared_ptr<const BehaviorPolicy>, std::uint64_t> latest() const {
    std::lock_guard lock(mu_);
    return {current_, version_};
  }
  // Blocks until a version newer than `seen` exists or `stop` is set.
  std::pair<std::shared_ptr<const BehaviorPolicy>, std::uint64_t> wait_newer(std::uint64_t seen,
                                                                              const std::atomic<bool>& stop) {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return version_ > seen || stop.load(); });
    return {current_, version_};
  }
  void wake() {
    std::lock_guard lock(mu_);
    cv_.notify_all();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::shared_ptr<const BehaviorPolicy> current_;
  std::uint64_t version_ = 0;
};

}  // namespace

PipelineStats run_pipeline(Learner& learner, const std::vector<ActorConfig>& actor_configs, const StateSpace& space,
                           std::uint64_t budget_steps, const PipelineConfig& config) {
  config.validate(actor_configs.size());
  if (actor_configs.size() != learner.num_actors()) throw ConfigError("learner and pipeline disagree on actor count");

  BoundedQueue<Trajectory> queue(config.queue_capacity);
  SnapshotBoard board;
  StepBudget budget(budget_steps);
  std::atomic<bool> stop{false};
  std::atomic<std::size_t> running{actor_configs.size()};
  std::vector<std::exception_ptr> actor_errors(actor_configs.size());

  board.publish(learner.snapshot(true));

  std::vector<std::thread> threads;
  threads.reserve(actor_configs.size());
  for (std::size_t k = 0; k < actor_configs.size(); ++k) {
    threads.emplace_back([&, k] {
      try {
        Actor actor(actor_configs[k], space);
        auto [snap, version] = board.latest();
        Trajectory traj;
        while (!stop.load()) {
          if (!actor.collect(*snap, version, budget, traj)) break;
          if (!queue.push(std::move(traj))) break;
          if (config.lockstep) {
            std::tie(snap, version) = board.wait_newer(version, stop);
          } else {
            std::tie(snap, version) = board.latest();
          }
        }
      } catch (...) {
        actor_errors[k] = std::current_exception();
        stop.store(true);
        queue.close();
      }
      if (running.fetch_sub(1) == 1) queue.close();
    });
  }

  PipelineStats stats;
  std::vector<std::uint8_t> seen(budget_steps, 0);
  std::vector<std::uint64_t> next_seq(actor_configs.size(), 0);
  std::exception_ptr learner_error;
  std::size_t since_publish = 0;
  try {
    while (auto traj = queue.pop()) {
      // Discard mode drops whatever is queued once the budget is spent.
      if (!config.drain && budget.reserved() >= budget_steps) {
        stats.discarded_steps += traj->valid_steps();
        continue;
      }
      for (const auto& st : traj->steps) {
        if (st.padding) continue;
        if (st.global_index < budget_steps) {
          if (seen[st.global_index]++) ++stats.duplicate_steps;
        }
        if (st.seq != next_seq[traj->actor_id]) ++stats.out_of_order;
        next_seq[traj->actor_id] = st.seq + 1;
      }
      learner.consume(*traj);
      ++stats.consumed_trajectories;
      stats.consumed_steps += traj->valid_steps();
      if (config.lockstep || ++since_publish >= config.snapshot_interval) {
        board.publish(learner.snapshot(true));
        ++stats.snapshots_published;
        since_publish = 0;
      }
    }
  } catch (...) {
    learner_error = std::current_exception();
    stop.store(true);
    queue.close();
    board.wake();
  }
  stop.store(true);
  board.wake();
  queue.close();
  for (auto& t : threads) t.join();

  if (learner_error) std::rethrow_exception(learner_error);
  for (auto& e : actor_errors) {
    if (e) std::rethrow_exception(e);
  }
  stats.max_queue_occupancy = queue.max_size();
  for (auto s : seen) {
    if (s == 0) ++stats.missing_steps;
  }
  if (!config.drain) stats.missing_steps -= std::min(stats.missing_steps, stats.discarded_steps);
  stats.audit_ok = stats.duplicate_steps == 0 && stats.missing_steps == 0 && stats.out_of_order == 0 &&
                   stats.consumed_steps + stats.discarded_steps == budget_steps;
  return stats;
}

}  // namespace sfgpi
