#include "sfgpi/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sfgpi/errors.hpp"
#include "sfgpi/features.hpp"

namespace sfgpi {

void BoundReport::finish() {
  slack = rhs - lhs;
  holds = lhs <= rhs + kTolerance;
}

double BoundReport::component(const std::string& name) const {
  for (const auto& [k, v] : components) {
    if (k == name) return v;
  }
  throw UsageError("report has no component '" + name + "'");
}

SolverOptions oracle_solver_options() {
  SolverOptions o;
  o.tol = 1e-13;
  o.max_iterations = 5'000'000;
  return o;
}

TabularMdp random_mdp(const RandomMdpSpec& spec, std::mt19937_64& rng) {
  if (spec.num_states == 0 || spec.num_actions == 0) throw UsageError("random MDP needs states and actions");
  std::gamma_distribution<double> expo(1.0, 1.0);
  std::uniform_real_distribution<double> unit_reward(-1.0, 1.0);
  TabularMdp::Builder b(spec.num_states, spec.num_actions, spec.num_rewards, spec.gamma);
  std::vector<double> row(spec.num_states);
  for (std::size_t s = 0; s < spec.num_states; ++s) {
    for (std::size_t a = 0; a < spec.num_actions; ++a) {
      double total = 0.0;
      for (auto& x : row) {
        x = expo(rng);
        total += x;
      }
      for (std::size_t n = 0; n < spec.num_states; ++n) {
        const auto S = static_cast<StateId>(s);
        const auto A = static_cast<ActionId>(a);
        const auto N = static_cast<StateId>(n);
        b.add_transition(S, A, N, row[n] / total);
        for (std::size_t k = 0; k < spec.num_rewards; ++k) b.set_reward(k, S, A, N, unit_reward(rng));
      }
    }
  }
  return b.build();
}

TabularMdp random_mdp(std::mt19937_64& rng, std::size_t max_states, std::size_t max_actions,
                      std::size_t num_rewards) {
  static constexpr double kGammas[] = {0.5, 0.9, 0.95};
  RandomMdpSpec spec;
  spec.num_states = std::uniform_int_distribution<std::size_t>(2, std::max<std::size_t>(2, max_states))(rng);
  spec.num_actions = std::uniform_int_distribution<std::size_t>(1, std::max<std::size_t>(1, max_actions))(rng);
  spec.num_rewards = num_rewards;
  spec.gamma = kGammas[std::uniform_int_distribution<int>(0, 2)(rng)];
  return random_mdp(spec, rng);
}

DeterministicPolicy random_policy(std::size_t num_states, std::size_t num_actions, std::mt19937_64& rng) {
  std::uniform_int_distribution<ActionId> pick(0, static_cast<ActionId>(num_actions) - 1);
  DeterministicPolicy pi(num_states, 0);
  for (std::size_t s = 0; s < num_states; ++s) pi[static_cast<StateId>(s)] = pick(rng);
  return pi;
}

RewardTable random_reward(std::size_t num_states, std::size_t num_actions, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RewardTable r(num_states, num_actions);
  for (auto& v : r.values()) v = u(rng);
  return r;
}

double reward_distance(const RewardTable& a, const RewardTable& b) { return sup_distance(a, b); }

namespace {

// Per state, the policy index and action attaining max_i q_i(s,a), lowest
// index first.
std::vector<std::pair<std::size_t, ActionId>> gpi_argmax(const std::vector<QTable>& q) {
  const std::size_t S = q.front().num_states();
  const std::size_t A = q.front().num_actions();
  std::vector<std::pair<std::size_t, ActionId>> out(S);
  for (std::size_t s = 0; s < S; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < q.size(); ++i) {
      for (std::size_t a = 0; a < A; ++a) {
        if (q[i](s, a) > best) {
          best = q[i](s, a);
          out[s] = {i, static_cast<ActionId>(a)};
        }
      }
    }
  }
  return out;
}

DeterministicPolicy gpi_from_values(const std::vector<QTable>& q) {
  const auto best = gpi_argmax(q);
  DeterministicPolicy pi(best.size(), 0);
  for (std::size_t s = 0; s < best.size(); ++s) pi[static_cast<StateId>(s)] = best[s].second;
  return pi;
}

QTable pointwise_max(const std::vector<QTable>& q) {
  QTable out = q.front();
  for (std::size_t i = 1; i < q.size(); ++i) {
    for (std::size_t k = 0; k < out.size(); ++k) out.values()[k] = std::max(out.values()[k], q[i].values()[k]);
  }
  return out;
}

}  // namespace

void perturb(std::vector<QTable>& q, double epsilon, Perturbation mode, std::uint64_t seed) {
  if (epsilon < 0.0) throw UsageError("perturbation size must be non-negative");
  if (mode == Perturbation::None || epsilon == 0.0 || q.empty()) return;
  if (mode == Perturbation::Uniform) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-epsilon, epsilon);
    for (auto& t : q) {
      for (auto& v : t.values()) v += u(rng);
    }
    return;
  }
  const std::size_t S = q.front().num_states();
  const std::size_t A = q.front().num_actions();
  std::vector<double> best(S, -std::numeric_limits<double>::infinity());
  for (const auto& t : q) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) best[s] = std::max(best[s], t(s, a));
    }
  }
  for (auto& t : q) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) t(s, a) += t(s, a) == best[s] ? -epsilon : epsilon;
    }
  }
}

BoundReport check_gpi_theorem(const TabularMdp& mdp, std::span<const DeterministicPolicy> policies,
                              const RewardTable& reward, double epsilon, Perturbation mode,
                              std::uint64_t perturb_seed) {
  if (policies.empty()) throw UsageError("GPI needs at least one policy");
  const auto opts = oracle_solver_options();
  std::vector<QTable> q;
  q.reserve(policies.size());
  for (const auto& pi : policies) {
    pi.validate(mdp.num_states(), mdp.num_actions());
    q.push_back(evaluate_policy(mdp, pi, reward, opts).q);
  }
  const QTable qmax = pointwise_max(q);
  std::vector<QTable> noisy = q;
  perturb(noisy, epsilon, mode, perturb_seed);
  const QTable qpi = evaluate_policy(mdp, gpi_from_values(noisy), reward, opts).q;

  BoundReport r;
  r.check = "gpi";
  r.lhs = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < qmax.size(); ++k) r.lhs = std::max(r.lhs, qmax.values()[k] - qpi.values()[k]);
  r.rhs = 2.0 * epsilon / (1.0 - mdp.gamma());
  r.components = {{"epsilon", epsilon}};
  r.finish();
  return r;
}

BoundReport check_lemma1(const TabularMdp& mdp, const RewardTable& reward_i, const RewardTable& reward_j,
                         const DeterministicPolicy& policy) {
  const auto opts = oracle_solver_options();
  const QTable qi = evaluate_policy(mdp, policy, reward_i, opts).q;
  const QTable qj = evaluate_policy(mdp, policy, reward_j, opts).q;
  BoundReport r;
  r.check = "lemma1";
  const double delta = reward_distance(reward_i, reward_j);
  r.lhs = sup_distance(qi, qj);
  r.rhs = delta / (1.0 - mdp.gamma());
  r.components = {{"delta_ij", delta}};
  r.finish();
  return r;
}

BoundReport check_lemma2(const TabularMdp& mdp, const RewardTable& reward_i, const RewardTable& reward_j) {
  const auto opts = oracle_solver_options();
  const QTable qi = solve_optimal(mdp, reward_i, opts).q;
  const QTable qj = solve_optimal(mdp, reward_j, opts).q;
  BoundReport r;
  r.check = "lemma2";
  const double delta = reward_distance(reward_i, reward_j);
  r.lhs = sup_distance(qi, qj);
  r.rhs = delta / (1.0 - mdp.gamma());
  r.components = {{"delta_ij", delta}};
  r.finish();
  return r;
}

BoundReport check_proposition1(const TabularMdp& mdp, const RewardTable& target, const RewardTable& reference,
                               std::span<const RewardTable> basis, double epsilon, Perturbation mode,
                               std::uint64_t perturb_seed) {
  if (basis.empty()) throw UsageError("proposition check needs at least one basis reward");
  const auto opts = oracle_solver_options();
  std::vector<QTable> q_on_ref;
  q_on_ref.reserve(basis.size());
  double nearest = std::numeric_limits<double>::infinity();
  for (const auto& rj : basis) {
    const DeterministicPolicy pj = greedy_policy(solve_optimal(mdp, rj, opts).q);
    q_on_ref.push_back(evaluate_policy(mdp, pj, reference, opts).q);
    nearest = std::min(nearest, reward_distance(reference, rj));
  }
  perturb(q_on_ref, epsilon, mode, perturb_seed);
  const DeterministicPolicy pi = gpi_from_values(q_on_ref);
  const QTable qstar = solve_optimal(mdp, target, opts).q;
  const QTable qpi = evaluate_policy(mdp, pi, target, opts).q;

  BoundReport r;
  r.check = "proposition1";
  const double to_ref = reward_distance(target, reference);
  r.lhs = sup_distance(qstar, qpi);
  r.rhs = 2.0 / (1.0 - mdp.gamma()) * (to_ref + nearest + epsilon);
  r.components = {{"r_minus_ri", to_ref}, {"min_ri_minus_rj", nearest}, {"epsilon", epsilon}};
  r.finish();
  return r;
}

BoundReport check_proposition1_projected(const TabularMdp& mdp, const RewardTable& target,
                                         std::span<const RewardTable> basis, double epsilon, Perturbation mode,
                                         std::uint64_t perturb_seed) {
  const Projection p = project_task(target, basis);
  return check_proposition1(mdp, target, combine(basis, p.w), basis, epsilon, mode, perturb_seed);
}

SweepResult proposition1_sweep(const TabularMdp& mdp, const RewardTable& outside, std::span<const RewardTable> basis,
                               std::size_t points) {
  if (points < 2) throw UsageError("a sweep needs at least two points");
  const Projection proj = project_task(outside, basis);
  const RewardTable inside = combine(basis, proj.w);
  SweepResult out;
  for (std::size_t k = 0; k < points; ++k) {
    const double alpha = static_cast<double>(k) / static_cast<double>(points - 1);
    RewardTable r = inside;
    for (std::size_t c = 0; c < r.size(); ++c) {
      r.values()[c] = inside.values()[c] + alpha * (outside.values()[c] - inside.values()[c]);
    }
    SweepPoint pt;
    pt.alpha = alpha;
    pt.distance = reward_distance(r, inside);
    pt.report = check_proposition1(mdp, r, inside, basis, 0.0, Perturbation::None, 0);
    out.points.push_back(std::move(pt));
  }
  const double scale = 2.0 / (1.0 - mdp.gamma());
  out.all_hold = out.monotone = true;
  out.continuity.check = "proposition1_continuity";
  out.continuity.lhs = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < out.points.size(); ++k) {
    const auto& p = out.points[k];
    out.all_hold = out.all_hold && p.report.holds;
    if (k == 0) continue;
    const auto& q = out.points[k - 1];
    if (p.report.lhs < q.report.lhs - BoundReport::kTolerance) out.monotone = false;
    const double excess = std::abs(p.report.lhs - q.report.lhs) - scale * std::abs(p.distance - q.distance);
    out.continuity.lhs = std::max(out.continuity.lhs, excess);
  }
  out.continuity.rhs = 0.0;
  out.continuity.components = {{"scale", scale}};
  out.continuity.finish();
  out.lipschitz = out.continuity.holds;
  return out;
}

}  // namespace sfgpi
