#include "sfgpi/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sfgpi/errors.hpp"

namespace sfgpi {

TaskVector::TaskVector(std::vector<double> w) : w_(std::move(w)) {
  for (double v : w_) {
    if (!std::isfinite(v)) throw DataError("task vector entries must be finite");
  }
}

TaskVector TaskVector::unit(std::size_t dim, std::size_t j) {
  TaskVector e = zeros(dim);
  e[j] = 1.0;
  return e;
}

double TaskVector::dot(std::span<const double> phi) const {
  if (phi.size() != w_.size()) {
    throw UsageError("dimension mismatch: task has " + std::to_string(w_.size()) + " weights, feature has " +
                     std::to_string(phi.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < w_.size(); ++i) acc += w_[i] * phi[i];
  return acc;
}

// ---------------------------------------------------------------------------

TaskMatrix::TaskMatrix(const std::vector<TaskVector>& rows) {
  if (rows.empty()) throw UsageError("task matrix needs at least one row");
  const std::size_t d = rows.front().dim();
  Eigen::MatrixXd W(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].dim() != d) throw UsageError("task matrix rows differ in dimension");
    for (std::size_t j = 0; j < d; ++j) W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  *this = TaskMatrix(std::move(W));
}

TaskMatrix::TaskMatrix(Eigen::MatrixXd W) : W_(std::move(W)) {
  if (W_.size() == 0) {
    rank_ = 0;
    return;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(W_);
  const auto& sv = svd.singularValues();
  const double scale = std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  rank_ = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > kRankTolerance * scale) ++rank_;
  }
}

TaskVector TaskMatrix::row(std::size_t i) const {
  std::vector<double> w(feature_dim());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = W_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return TaskVector(std::move(w));
}

TaskVector task_transform(const TaskMatrix& W, const TaskVector& w_phi) {
  constexpr double kRidge = 1e-12;
  const std::size_t d = W.feature_dim();
  if (w_phi.dim() != d) throw UsageError("task_transform: task dimension does not match W columns");
  if (W.rank() < d) {
    throw RankError("task_transform: W has rank " + std::to_string(W.rank()) + " < " + std::to_string(d) +
                    "; use project_task instead");
  }
  const Eigen::MatrixXd& M = W.matrix();
  Eigen::MatrixXd gram = M.transpose() * M;
  gram.diagonal().array() += kRidge;
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(w_phi.values().data(), static_cast<Eigen::Index>(d));
  Eigen::VectorXd w_prime = M * gram.ldlt().solve(w);
  return TaskVector(std::vector<double>(w_prime.data(), w_prime.data() + w_prime.size()));
}

// ---------------------------------------------------------------------------

RewardModel::RewardModel(std::size_t num_tasks, std::size_t num_states, std::size_t num_actions,
                         double alpha_r)
    : num_states_(num_states), num_actions_(num_actions), alpha_r_(alpha_r),
      tables_(num_tasks, RewardTable(num_states, num_actions)) {
  if (!(alpha_r > 0.0 && alpha_r <= 1.0)) throw ConfigError("alpha_r must lie in (0,1]");
}

void RewardModel::update(std::size_t task_id, StateId s, ActionId a, double observed_r) {
  if (!std::isfinite(observed_r)) throw DataError("reward_update: non-finite observed reward");
  if (task_id >= tables_.size()) throw UsageError("reward_update: task id out of range");
  double& r = tables_[task_id](static_cast<std::size_t>(s), static_cast<std::size_t>(a));
  r += alpha_r_ * (observed_r - r);
}

void RewardModel::phi(StateId s, ActionId a, std::span<double> out) const {
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    out[t] = tables_[t](static_cast<std::size_t>(s), static_cast<std::size_t>(a));
  }
}

std::vector<double> RewardModel::phi_of(StateId s, ActionId a) const {
  std::vector<double> out(tables_.size());
  phi(s, a, out);
  return out;
}

void reward_update(RewardModel& model, std::size_t task_id, StateId s, ActionId a, double observed_r) {
  model.update(task_id, s, a, observed_r);
}

// ---------------------------------------------------------------------------

Projection project_task(const RewardTable& target, std::span<const RewardTable> basis) {
  if (basis.empty()) throw UsageError("project_task: empty basis");
  const Eigen::Index n = static_cast<Eigen::Index>(target.size());
  const Eigen::Index k = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd B(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!basis[static_cast<std::size_t>(j)].same_shape(target)) {
      throw UsageError("project_task: basis table support differs from target");
    }
    B.col(j) = Eigen::Map<const Eigen::VectorXd>(basis[static_cast<std::size_t>(j)].values().data(), n);
  }
  Eigen::Map<const Eigen::VectorXd> y(target.values().data(), n);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(B);
  cod.setThreshold(TaskMatrix::kRankTolerance);
  Eigen::VectorXd w = cod.solve(y);

  Projection out;
  out.w = TaskVector(std::vector<double>(w.data(), w.data() + w.size()));
  out.degenerate = cod.rank() < k;
  out.residual_inf = n == 0 ? 0.0 : (B * w - y).cwiseAbs().maxCoeff();
  return out;
}

RewardTable combine(std::span<const RewardTable> basis, const TaskVector& w) {
  if (basis.size() != w.dim()) throw UsageError("combine: weight count does not match basis size");
  RewardTable out(basis.front().num_states(), basis.front().num_actions());
  for (std::size_t j = 0; j < basis.size(); ++j) {
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += w[j] * basis[j].values()[i];
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct CellStats {
  double count = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;
};

}  // namespace

MultitaskFit fit_multitask_features(std::span<const RewardSample> samples, std::size_t num_states,
                                    std::size_t num_actions, std::size_t d, std::size_t num_tasks,
                                    const MultitaskOptions& options) {
  if (d == 0 || num_tasks == 0) throw UsageError("fit_multitask_features: d and D must be positive");
  const std::size_t num_sa = num_states * num_actions;
  std::vector<CellStats> cells(num_sa * num_tasks);
  std::vector<bool> covered(num_tasks, false);
  for (const auto& smp : samples) {
    if (smp.task >= num_tasks) throw DataError("fit_multitask_features: sample task id out of range");
    if (!std::isfinite(smp.reward)) throw DataError("fit_multitask_features: non-finite reward");
    const std::size_t sa = static_cast<std::size_t>(smp.s) * num_actions + static_cast<std::size_t>(smp.a);
    if (sa >= num_sa) throw DataError("fit_multitask_features: sample (s,a) out of range");
    CellStats& c = cells[sa * num_tasks + smp.task];
    c.count += 1.0;
    c.sum += smp.reward;
    c.sum_sq += smp.reward * smp.reward;
    covered[smp.task] = true;
  }
  for (std::size_t t = 0; t < num_tasks; ++t) {
    if (!covered[t]) throw DataError("fit_multitask_features: task " + std::to_string(t) + " has no samples");
  }

  const Eigen::Index dim = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(num_sa));
  Eigen::MatrixXd w(dim, static_cast<Eigen::Index>(num_tasks));
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = normal(rng);

  auto squared_error = [&]() {
    double err = 0.0;
    for (std::size_t sa = 0; sa < num_sa; ++sa) {
      for (std::size_t t = 0; t < num_tasks; ++t) {
        const CellStats& c = cells[sa * num_tasks + t];
        if (c.count == 0.0) continue;
        const double pred = phi.col(static_cast<Eigen::Index>(sa)).dot(w.col(static_cast<Eigen::Index>(t)));
        err += c.count * pred * pred - 2.0 * pred * c.sum + c.sum_sq;
      }
    }
    return std::max(err, 0.0);
  };

  MultitaskFit fit;
  fit.num_states = num_states;
  fit.num_actions = num_actions;
  fit.dim = d;
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
    // Feature step: each (s,a) is an independent ridge regression on the task weights.
    for (std::size_t sa = 0; sa < num_sa; ++sa) {
      Eigen::MatrixXd gram = Eigen::MatrixXd::Identity(dim, dim) * options.ridge;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
      bool any = false;
      for (std::size_t t = 0; t < num_tasks; ++t) {
        const CellStats& c = cells[sa * num_tasks + t];
        if (c.count == 0.0) continue;
        any = true;
        const auto wt = w.col(static_cast<Eigen::Index>(t));
        gram.noalias() += c.count * wt * wt.transpose();
        rhs.noalias() += c.sum * wt;
      }
      if (any) phi.col(static_cast<Eigen::Index>(sa)) = gram.ldlt().solve(rhs);
    }
    // Weight step: each task is an independent ridge regression on the features.
    for (std::size_t t = 0; t < num_tasks; ++t) {
      Eigen::MatrixXd gram = Eigen::MatrixXd::Identity(dim, dim) * options.ridge;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
      for (std::size_t sa = 0; sa < num_sa; ++sa) {
        const CellStats& c = cells[sa * num_tasks + t];
        if (c.count == 0.0) continue;
        const auto p = phi.col(static_cast<Eigen::Index>(sa));
        gram.noalias() += c.count * p * p.transpose();
        rhs.noalias() += c.sum * p;
      }
      w.col(static_cast<Eigen::Index>(t)) = gram.ldlt().solve(rhs);
    }
    const double err = squared_error();
    fit.error_history.push_back(err);
    if (err <= options.tol || previous - err <= options.tol * std::max(1.0, previous)) break;
    previous = err;
  }

  fit.error = fit.error_history.empty() ? squared_error() : fit.error_history.back();
  fit.features.assign(phi.data(), phi.data() + phi.size());
  for (std::size_t t = 0; t < num_tasks; ++t) {
    const auto col = w.col(static_cast<Eigen::Index>(t));
    fit.weights.emplace_back(std::vector<double>(col.data(), col.data() + col.size()));
  }
  return fit;
}

double reward_model_error(const RewardModel& model, std::span<const RewardSample> samples) {
  double err = 0.0;
  for (const auto& smp : samples) {
    const double e = smp.reward - model.table(smp.task)(static_cast<std::size_t>(smp.s), static_cast<std::size_t>(smp.a));
    err += e * e;
  }
  return err;
}

}  // namespace sfgpi
