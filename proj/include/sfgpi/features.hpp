#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sfgpi/mdp.hpp"

namespace sfgpi {

// Weights defining a task's reward as a linear function of features.
class TaskVector {
 public:
  TaskVector() = default;
  explicit TaskVector(std::vector<double> w);
  static TaskVector zeros(std::size_t dim) { return TaskVector(std::vector<double>(dim, 0.0)); }
  static TaskVector unit(std::size_t dim, std::size_t j);

  std::size_t dim() const noexcept { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  double& operator[](std::size_t i) { return w_[i]; }
  std::span<const double> values() const noexcept { return w_; }
  std::span<double> values() noexcept { return w_; }

  double dot(std::span<const double> phi) const;

  friend bool operator==(const TaskVector&, const TaskVector&) = default;

 private:
  std::vector<double> w_;
};

// Compact task notation: "1-100" is (1,-1,0,0); "(1,-0.1,-0.1,-0.1)" for
// fractional entries. Throws FormatError.
TaskVector parse_task(std::string_view text);
// Inverse of parse_task; digits-only form when every entry is in {-9..9}.
std::string format_task(const TaskVector& w);

// D base-task vectors stacked as rows (D x d).
class TaskMatrix {
 public:
  static constexpr double kRankTolerance = 1e-9;

  TaskMatrix() = default;
  explicit TaskMatrix(const std::vector<TaskVector>& rows);
  explicit TaskMatrix(Eigen::MatrixXd W);

  std::size_t num_tasks() const noexcept { return static_cast<std::size_t>(W_.rows()); }
  std::size_t feature_dim() const noexcept { return static_cast<std::size_t>(W_.cols()); }
  std::size_t rank() const noexcept { return rank_; }
  const Eigen::MatrixXd& matrix() const noexcept { return W_; }
  TaskVector row(std::size_t i) const;

 private:
  Eigen::MatrixXd W_;
  std::size_t rank_ = 0;
};

// w' = (W^+)^T w, so that w'^T (W phi) = w^T phi. Throws RankError when
// rank(W) < d.
TaskVector task_transform(const TaskMatrix& W, const TaskVector& w_phi);

// Running per-(task, s, a) reward estimates; phi(s,a) is their stack.
class RewardModel {
 public:
  RewardModel() = default;
  RewardModel(std::size_t num_tasks, std::size_t num_states, std::size_t num_actions, double alpha_r);

  std::size_t num_tasks() const noexcept { return tables_.size(); }
  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  double alpha() const noexcept { return alpha_r_; }

  // r_t(s,a) += alpha_r (r - r_t(s,a)). Throws DataError on non-finite r.
  void update(std::size_t task_id, StateId s, ActionId a, double observed_r);

  // [r_1(s,a), ..., r_D(s,a)] written into `out` (size D).
  void phi(StateId s, ActionId a, std::span<double> out) const;
  std::vector<double> phi_of(StateId s, ActionId a) const;

  const RewardTable& table(std::size_t t) const { return tables_[t]; }
  RewardTable& table(std::size_t t) { return tables_[t]; }

 private:
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  double alpha_r_ = 0.1;
  std::vector<RewardTable> tables_;
};

void reward_update(RewardModel& model, std::size_t task_id, StateId s, ActionId a, double observed_r);
inline std::vector<double> phi_of(const RewardModel& model, StateId s, ActionId a) {
  return model.phi_of(s, a);
}

struct Projection {
  TaskVector w;
  double residual_inf = 0.0;
  // Basis tables were linearly dependent; w is the minimum-norm solution.
  bool degenerate = false;
};

// Least-squares weights w minimizing sum (target - sum_t w_t basis_t)^2 over
// every (s,a), and the sup-norm of the fit error.
Projection project_task(const RewardTable& target, std::span<const RewardTable> basis);
// Linear combination sum_t w_t basis_t.
RewardTable combine(std::span<const RewardTable> basis, const TaskVector& w);

struct RewardSample {
  StateId s;
  ActionId a;
  std::size_t task;
  double reward;
};

struct MultitaskOptions {
  double tol = 1e-12;
  std::size_t max_sweeps = 500;
  double ridge = 1e-12;
  unsigned long long seed = 7;
};

// Factorization r(s,a,t) ~ phi(s,a)^T w_t fit by alternating least squares.
struct MultitaskFit {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t dim = 0;
  std::vector<double> features;  // [s][a][dim]
  std::vector<TaskVector> weights;  // one per task
  double error = 0.0;  // sum of squared residuals over samples
  std::vector<double> error_history;  // after each sweep

  std::span<const double> phi(StateId s, ActionId a) const {
    return {features.data() + (static_cast<std::size_t>(s) * num_actions + static_cast<std::size_t>(a)) * dim,
            dim};
  }
};

MultitaskFit fit_multitask_features(std::span<const RewardSample> samples, std::size_t num_states,
                                    std::size_t num_actions, std::size_t d, std::size_t num_tasks,
                                    const MultitaskOptions& options = {});

// Sum of squared errors of predicting each sample by model.table(task)(s,a).
double reward_model_error(const RewardModel& model, std::span<const RewardSample> samples);

}  // namespace sfgpi
