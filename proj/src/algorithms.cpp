#include "sfgpi/algorithms.hpp"

#include <cmath>

#include "sfgpi/errors.hpp"

namespace sfgpi {

namespace {

std::size_t cell(const TrajectoryStep& st, std::size_t num_actions) {
  return static_cast<std::size_t>(st.state) * num_actions + static_cast<std::size_t>(st.action);
}

void check_finite(double delta, const char* what) {
  if (!std::isfinite(delta)) throw DivergenceError(std::string(what) + ": TD error became non-finite");
}

// GPI restricted to one SF component, as used while building the basis.
class ComponentGpi : public BehaviorPolicy {
 public:
  explicit ComponentGpi(std::vector<SfTable> owned) : owned_(std::move(owned)) {
    for (const auto& t : owned_) ptrs_.push_back(&t);
  }
  explicit ComponentGpi(const std::vector<SfTable>* view) {
    for (const auto& t : *view) ptrs_.push_back(&t);
  }
  Decision decide(StateId s, std::size_t task) const override {
    const GpiChoice c = gpi_action_component(s, ptrs_, task);
    return {c.action, static_cast<int>(c.policy)};
  }

 private:
  std::vector<SfTable> owned_;
  std::vector<const SfTable*> ptrs_;
};

class LinearGpi : public BehaviorPolicy {
 public:
  LinearGpi(std::shared_ptr<const PolicyLibrary> library, TaskVector w, std::shared_ptr<const SfTable> extra)
      : library_(std::move(library)), extra_(std::move(extra)), w_(std::move(w)) {
    for (const auto& t : library_->tables) ptrs_.push_back(&t);
    if (extra_) ptrs_.push_back(extra_.get());
  }
  Decision decide(StateId s, std::size_t) const override {
    const GpiChoice c = gpi_action(s, ptrs_, w_);
    return {c.action, static_cast<int>(c.policy)};
  }

 private:
  std::shared_ptr<const PolicyLibrary> library_;
  std::shared_ptr<const SfTable> extra_;
  TaskVector w_;
  std::vector<const SfTable*> ptrs_;
};

class GreedyQ : public BehaviorPolicy {
 public:
  explicit GreedyQ(std::shared_ptr<const QTable> q) : q_(std::move(q)) {}
  Decision decide(StateId s, std::size_t) const override {
    return {argmax(q_->row(static_cast<std::size_t>(s))), 0};
  }

 private:
  std::shared_ptr<const QTable> q_;
};

class FirstAction : public BehaviorPolicy {
 public:
  Decision decide(StateId, std::size_t) const override { return {0, -1}; }
};

}  // namespace

// ---------------------------------------------------------------------------

BasisLearner::BasisLearner(std::size_t num_states, std::size_t num_actions, TaskMatrix base_tasks,
                           const Hyperparams& hyper, std::size_t num_actors)
    : Learner(num_states, num_actions, base_tasks.num_tasks(), num_actors),
      base_tasks_(std::move(base_tasks)),
      hyper_(hyper) {
  hyper_.validate();
  const std::size_t D = base_tasks_.num_tasks();
  if (D == 0) throw ConfigError("basis building needs at least one base task");
  reward_model_ = RewardModel(D, num_states, num_actions, hyper_.alpha_r);
  for (std::size_t i = 0; i < D; ++i) {
    tables_.emplace_back(num_states, num_actions, D, "base" + std::to_string(i));
    steps_.emplace_back(num_states * num_actions, hyper_.alpha_q, hyper_.alpha_decay);
  }
  traces_.assign(num_actors, std::vector<TraceTable>(D, TraceTable(num_states, num_actions, hyper_.lambda)));
}

std::shared_ptr<const BehaviorPolicy> BasisLearner::snapshot(bool copy) const {
  if (copy) return std::make_shared<ComponentGpi>(std::vector<SfTable>(tables_));
  return std::make_shared<ComponentGpi>(&tables_);
}

std::optional<double> BasisLearner::learn(const TrajectoryStep& st, std::span<const double>, std::uint32_t actor,
                                          std::size_t t) {
  const std::size_t D = tables_.size();
  if (t >= D) throw UsageError("basis step for an unknown task");
  reward_model_.update(t, st.state, st.action, st.reward);
  StepSizes& alpha = steps_[t];
  alpha.visit(cell(st, num_actions()));
  const double gl = hyper_.gamma * hyper_.lambda;
  for (std::size_t i = 0; i < D; ++i) {
    SfTable& psi = tables_[i];
    TraceTable& e = traces_[actor][i];
    if (st.action != psi.greedy_component(st.state, i)) e.clear();
    e.accumulate(st.state, st.action);
    const ActionId a_next = psi.greedy_component(st.next_state, i);
    const double delta = st.reward + hyper_.gamma * psi(st.next_state, a_next, t) - psi(st.state, st.action, t);
    check_finite(delta, "basis Q update");
    double* base = psi.values().data();
    e.for_each([&](std::size_t idx, double ev) { base[idx * D + t] += alpha.at(idx) * delta * ev; });
    e.decay(gl);
  }
  return std::nullopt;
}

void BasisLearner::end_episode(std::uint32_t actor) {
  for (auto& e : traces_[actor]) e.clear();
}

PolicyLibrary BasisLearner::library() const {
  PolicyLibrary lib;
  lib.tables = tables_;
  lib.reward_model = reward_model_;
  lib.base_tasks = base_tasks_;
  return lib;
}

// ---------------------------------------------------------------------------

TransferLearner::TransferLearner(std::shared_ptr<const PolicyLibrary> library, const Hyperparams& hyper,
                                 bool extend_basis, std::size_t num_actors, std::optional<TaskVector> initial_w)
    : Learner(library->reward_model.num_states(), library->reward_model.num_actions(),
              library->size() + (extend_basis ? 1 : 0), num_actors),
      library_(std::move(library)),
      hyper_(hyper),
      extend_(extend_basis) {
  hyper_.validate();
  library_->validate();
  if (library_->tables.empty() && !extend_) throw ConfigError("transfer needs a non-empty library");
  const std::size_t D = library_->dim();
  w_ = initial_w ? *initial_w : TaskVector::zeros(D);
  if (w_.dim() != D) throw UsageError("initial w has the wrong dimension");
  phi_.assign(D, 0.0);
  delta_.assign(D, 0.0);
  if (extend_) {
    psi_new_ = std::make_shared<SfTable>(num_states(), num_actions(), D, "new");
    steps_ = StepSizes(num_states() * num_actions(), hyper_.alpha_psi, hyper_.alpha_decay);
    traces_.assign(num_actors, TraceTable(num_states(), num_actions(), hyper_.lambda));
  }
}

const SfTable& TransferLearner::new_table() const {
  if (!psi_new_) throw UsageError("transfer mode learns no new SF table");
  return *psi_new_;
}

std::shared_ptr<const BehaviorPolicy> TransferLearner::snapshot(bool copy) const {
  std::shared_ptr<const SfTable> extra;
  if (psi_new_) extra = copy ? std::make_shared<const SfTable>(*psi_new_) : std::shared_ptr<const SfTable>(psi_new_);
  return std::make_shared<LinearGpi>(library_, w_, std::move(extra));
}

std::optional<double> TransferLearner::learn(const TrajectoryStep& st, std::span<const double>, std::uint32_t actor,
                                             std::size_t) {
  library_->reward_model.phi(st.state, st.action, phi_);
  w_update(w_, phi_, st.reward, hyper_.alpha_w);
  for (std::size_t j = 0; j < w_.dim(); ++j) check_finite(w_[j], "w update");
  if (!extend_) return std::nullopt;

  SfTable& psi = *psi_new_;
  TraceTable& e = traces_[actor];
  steps_.visit(cell(st, num_actions()));
  const bool on_policy = st.action == psi.greedy(st.state, w_);
  const ActionId a_next = psi.greedy(st.next_state, w_);
  const SfTransition tr{st.state, st.action, st.next_state, false};
  if (!hyper_.mix_q_loss) {
    sf_td_update(psi, e, tr, a_next, phi_, steps_, hyper_.gamma, on_policy, delta_);
  } else {
    // Weighted sum of the SF loss gradient and the direct Q loss gradient
    // (the latter w.r.t. psi is delta_q * w).
    const std::size_t D = psi.dim();
    for (std::size_t i = 0; i < D; ++i) {
      delta_[i] = phi_[i] + hyper_.gamma * psi(st.next_state, a_next, i) - psi(st.state, st.action, i);
      check_finite(delta_[i], "SF update");
    }
    const double delta_q = st.reward + hyper_.gamma * psi.q(st.next_state, a_next, w_) - psi.q(st.state, st.action, w_);
    check_finite(delta_q, "Q update");
    if (!on_policy) e.clear();
    e.accumulate(st.state, st.action);
    double* base = psi.values().data();
    e.for_each([&](std::size_t idx, double ev) {
      const double step = steps_.at(idx) * ev;
      for (std::size_t i = 0; i < D; ++i) {
        base[idx * D + i] += step * (hyper_.q_loss_weight * delta_q * w_[i] + hyper_.sf_loss_weight * delta_[i]);
      }
    });
    e.decay(hyper_.gamma * hyper_.lambda);
  }
  double sq = 0.0;
  for (double d : delta_) sq += d * d;
  return sq / static_cast<double>(delta_.size());
}

void TransferLearner::end_episode(std::uint32_t actor) {
  if (extend_) traces_[actor].clear();
}

// ---------------------------------------------------------------------------

QLambdaLearner::QLambdaLearner(std::size_t num_states, std::size_t num_actions, const Hyperparams& hyper,
                               std::size_t num_actors)
    : Learner(num_states, num_actions, 1, num_actors),
      hyper_(hyper),
      q_(std::make_shared<QTable>(num_states, num_actions)),
      steps_(num_states * num_actions, hyper.alpha_q, hyper.alpha_decay),
      traces_(num_actors, TraceTable(num_states, num_actions, hyper.lambda)) {
  hyper_.validate();
}

std::shared_ptr<const BehaviorPolicy> QLambdaLearner::snapshot(bool copy) const {
  if (copy) return std::make_shared<GreedyQ>(std::make_shared<const QTable>(*q_));
  return std::make_shared<GreedyQ>(q_);
}

std::optional<double> QLambdaLearner::learn(const TrajectoryStep& st, std::span<const double>, std::uint32_t actor,
                                            std::size_t) {
  QTable& q = *q_;
  TraceTable& e = traces_[actor];
  steps_.visit(cell(st, num_actions()));
  const auto s = static_cast<std::size_t>(st.state);
  const auto next = static_cast<std::size_t>(st.next_state);
  if (st.action != argmax(q.row(s))) e.clear();
  e.accumulate(st.state, st.action);
  const ActionId a_next = argmax(q.row(next));
  const double delta =
      st.reward + hyper_.gamma * q(next, static_cast<std::size_t>(a_next)) - q(s, static_cast<std::size_t>(st.action));
  check_finite(delta, "Q(lambda)");
  double* base = q.values().data();
  e.for_each([&](std::size_t idx, double ev) { base[idx] += steps_.at(idx) * delta * ev; });
  e.decay(hyper_.gamma * hyper_.lambda);
  return std::nullopt;
}

void QLambdaLearner::end_episode(std::uint32_t actor) { traces_[actor].clear(); }

PassiveLearner::PassiveLearner(std::size_t num_states, std::size_t num_actions, std::size_t num_actors)
    : Learner(num_states, num_actions, 0, num_actors) {}

std::shared_ptr<const BehaviorPolicy> PassiveLearner::snapshot(bool) const { return std::make_shared<FirstAction>(); }

// ---------------------------------------------------------------------------

std::size_t actor_count(const RunSetup& setup, std::size_t num_tasks) {
  if (setup.mode != ExecutionMode::Pipeline) return 1;
  return setup.actors_per_task * num_tasks;
}

RunOutput drive(Learner& learner, const std::vector<TaskVector>& tasks, const RunSetup& setup,
                const EpsilonSchedule& epsilon, std::uint64_t steps) {
  if (!setup.space) throw UsageError("run setup has no state space");
  if (tasks.empty()) throw ConfigError("run needs at least one task");
  const StateSpace& space = *setup.space;
  ActorConfig base;
  base.grid = space.config();
  base.tasks = tasks;
  base.unroll = setup.unroll;
  base.epsilon = epsilon;

  RunOutput out;
  switch (setup.mode) {
    case ExecutionMode::Sequential: {
      base.seed = actor_seed(setup.seed, 0);
      run_sequential(learner, base, space, steps);
      break;
    }
    case ExecutionMode::Lockstep: {
      base.seed = actor_seed(setup.seed, 0);
      PipelineConfig pc = setup.pipeline;
      pc.lockstep = true;
      pc.queue_capacity = 1;
      pc.snapshot_interval = 1;
      out.stats = run_pipeline(learner, {base}, space, steps, pc);
      break;
    }
    case ExecutionMode::Pipeline: {
      if (setup.actors_per_task == 0) throw ConfigError("actors_per_task must be positive");
      std::vector<ActorConfig> actors;
      for (std::size_t t = 0; t < tasks.size(); ++t) {
        for (std::size_t k = 0; k < setup.actors_per_task; ++k) {
          ActorConfig a = base;
          a.actor_id = static_cast<std::uint32_t>(actors.size());
          a.schedule = TaskSchedule::Pinned;
          a.pinned_task = t;
          a.seed = actor_seed(setup.seed, a.actor_id);
          actors.push_back(std::move(a));
        }
      }
      out.stats = run_pipeline(learner, actors, space, steps, setup.pipeline);
      break;
    }
  }
  out.log = learner.log();
  return out;
}

BasisResult algorithm2_run(const TaskMatrix& base_tasks, const RunSetup& setup, const Hyperparams& hyper) {
  if (!setup.space) throw UsageError("run setup has no state space");
  const std::size_t D = base_tasks.num_tasks();
  if (base_tasks.feature_dim() != static_cast<std::size_t>(setup.space->config().num_object_types)) {
    throw ConfigError("base task dimension does not match the number of object types");
  }
  std::vector<TaskVector> tasks;
  for (std::size_t i = 0; i < D; ++i) tasks.push_back(base_tasks.row(i));
  BasisLearner learner(setup.space->size(), kNumMoves, base_tasks, hyper, actor_count(setup, D));
  BasisResult result;
  result.run = drive(learner, tasks, setup, hyper.epsilon, hyper.total_steps);
  std::vector<std::uint64_t> per_task(D, 0);
  for (const auto& ep : result.run.log.episodes) ++per_task[ep.task_id];
  for (std::size_t t = 0; t < D; ++t) {
    if (per_task[t] == 0) {
      result.run.log.warnings.push_back("base task " + std::to_string(t) + " completed no episode");
    }
  }
  result.library = learner.library();
  return result;
}

TransferResult algorithm1_run(std::shared_ptr<const PolicyLibrary> library, const TaskVector& test_task,
                              const RunSetup& setup, const Hyperparams& hyper, bool extend_basis,
                              std::optional<TaskVector> initial_w) {
  if (!setup.space) throw UsageError("run setup has no state space");
  if (library->reward_model.num_states() != setup.space->size()) {
    throw ConfigError("library state count does not match the environment");
  }
  TransferLearner learner(library, hyper, extend_basis, actor_count(setup, 1), std::move(initial_w));
  TransferResult result;
  result.run = drive(learner, {test_task}, setup, hyper.epsilon, hyper.total_steps);
  result.w = learner.w();
  if (extend_basis) result.new_table = learner.new_table();
  return result;
}

BaselineResult qlambda_run(const TaskVector& test_task, const RunSetup& setup, const Hyperparams& hyper) {
  if (!setup.space) throw UsageError("run setup has no state space");
  QLambdaLearner learner(setup.space->size(), kNumMoves, hyper, actor_count(setup, 1));
  BaselineResult result;
  result.run = drive(learner, {test_task}, setup, hyper.epsilon, hyper.total_steps);
  result.q = learner.q();
  return result;
}

RunOutput random_run(const TaskVector& test_task, const RunSetup& setup, std::uint64_t steps) {
  if (!setup.space) throw UsageError("run setup has no state space");
  PassiveLearner learner(setup.space->size(), kNumMoves, actor_count(setup, 1));
  return drive(learner, {test_task}, setup, EpsilonSchedule{1.0, 1.0, 0}, steps);
}

}  // namespace sfgpi
