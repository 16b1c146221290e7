#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "sfgpi/features.hpp"
#include "sfgpi/gridworld.hpp"
#include "sfgpi/pipeline.hpp"
#include "sfgpi/sf.hpp"

namespace sfgpi {

// Basis building with epsilon-greedy Q(lambda). Task t is active per
// trajectory; behaviour is GPI over the component-t action values; every
// policy's component t learns from the observed reward with a' = pi_i(s').
class BasisLearner : public Learner {
 public:
  BasisLearner(std::size_t num_states, std::size_t num_actions, TaskMatrix base_tasks, const Hyperparams& hyper,
               std::size_t num_actors);

  std::shared_ptr<const BehaviorPolicy> snapshot(bool copy) const override;
  const std::vector<SfTable>& tables() const noexcept { return tables_; }
  const RewardModel& reward_model() const noexcept { return reward_model_; }
  PolicyLibrary library() const;

 protected:
  std::optional<double> learn(const TrajectoryStep& step, std::span<const double> feature, std::uint32_t actor,
                              std::size_t task) override;
  void end_episode(std::uint32_t actor) override;

 private:
  TaskMatrix base_tasks_;
  Hyperparams hyper_;
  std::vector<SfTable> tables_;
  RewardModel reward_model_;
  std::vector<StepSizes> steps_;               // per task
  std::vector<std::vector<TraceTable>> traces_;  // [actor][policy]
};

// SF&GPI on a test task: GPI over the library with a concurrently learned
// w. In continual mode a fresh SF table joins the GPI set and is learned by
// SF TD(lambda) toward the policy greedy on psi_new^T w.
class TransferLearner : public Learner {
 public:
  TransferLearner(std::shared_ptr<const PolicyLibrary> library, const Hyperparams& hyper, bool extend_basis,
                  std::size_t num_actors, std::optional<TaskVector> initial_w = std::nullopt);

  std::shared_ptr<const BehaviorPolicy> snapshot(bool copy) const override;
  const TaskVector& w() const noexcept { return w_; }
  bool extends_basis() const noexcept { return extend_; }
  // The new table (continual mode only).
  const SfTable& new_table() const;

 protected:
  std::optional<double> learn(const TrajectoryStep& step, std::span<const double> feature, std::uint32_t actor,
                              std::size_t task) override;
  void end_episode(std::uint32_t actor) override;

 private:
  std::shared_ptr<const PolicyLibrary> library_;
  Hyperparams hyper_;
  bool extend_;
  TaskVector w_;
  std::shared_ptr<SfTable> psi_new_;
  StepSizes steps_;
  std::vector<TraceTable> traces_;  // per actor
  std::vector<double> phi_, delta_;
};

// Watkins Q(lambda) from scratch on one task.
class QLambdaLearner : public Learner {
 public:
  QLambdaLearner(std::size_t num_states, std::size_t num_actions, const Hyperparams& hyper, std::size_t num_actors);

  std::shared_ptr<const BehaviorPolicy> snapshot(bool copy) const override;
  const QTable& q() const noexcept { return *q_; }

 protected:
  std::optional<double> learn(const TrajectoryStep& step, std::span<const double> feature, std::uint32_t actor,
                              std::size_t task) override;
  void end_episode(std::uint32_t actor) override;

 private:
  Hyperparams hyper_;
  std::shared_ptr<QTable> q_;
  StepSizes steps_;
  std::vector<TraceTable> traces_;
};

// Logs returns only; pair with an epsilon schedule fixed at 1 for the
// uniform random policy.
class PassiveLearner : public Learner {
 public:
  PassiveLearner(std::size_t num_states, std::size_t num_actions, std::size_t num_actors);
  std::shared_ptr<const BehaviorPolicy> snapshot(bool copy) const override;

 protected:
  std::optional<double> learn(const TrajectoryStep&, std::span<const double>, std::uint32_t, std::size_t) override {
    return std::nullopt;
  }
  void end_episode(std::uint32_t) override {}
};

// ---------------------------------------------------------------------------
// Run wrappers

enum class ExecutionMode { Sequential, Pipeline, Lockstep };

struct RunSetup {
  const StateSpace* space = nullptr;
  std::uint64_t seed = 0;
  std::size_t unroll = 20;
  ExecutionMode mode = ExecutionMode::Sequential;
  std::size_t actors_per_task = 2;
  PipelineConfig pipeline;
};

struct RunOutput {
  RunLog log;
  std::optional<PipelineStats> stats;
};

struct BasisResult {
  PolicyLibrary library;
  RunOutput run;
};

BasisResult algorithm2_run(const TaskMatrix& base_tasks, const RunSetup& setup, const Hyperparams& hyper);

struct TransferResult {
  RunOutput run;
  std::optional<SfTable> new_table;
  TaskVector w;
};

TransferResult algorithm1_run(std::shared_ptr<const PolicyLibrary> library, const TaskVector& test_task,
                              const RunSetup& setup, const Hyperparams& hyper, bool extend_basis,
                              std::optional<TaskVector> initial_w = std::nullopt);

struct BaselineResult {
  RunOutput run;
  QTable q;
};

BaselineResult qlambda_run(const TaskVector& test_task, const RunSetup& setup, const Hyperparams& hyper);
RunOutput random_run(const TaskVector& test_task, const RunSetup& setup, std::uint64_t steps);

// Actors a run will use for `num_tasks` environment tasks.
std::size_t actor_count(const RunSetup& setup, std::size_t num_tasks);

// Runs `learner` on `tasks` (one pinned group of actors per task in the
// pipeline modes, round-robin in sequential mode).
RunOutput drive(Learner& learner, const std::vector<TaskVector>& tasks, const RunSetup& setup,
                const EpsilonSchedule& epsilon, std::uint64_t steps);

}  // namespace sfgpi
