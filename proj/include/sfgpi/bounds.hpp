#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sfgpi/mdp.hpp"

namespace sfgpi {

struct BoundReport {
  std::string check;
  double lhs = 0.0;    // measured gap
  double rhs = 0.0;    // bound
  double slack = 0.0;  // rhs - lhs
  std::vector<std::pair<std::string, double>> components;
  bool holds = false;

  static constexpr double kTolerance = 1e-9;
  // Fills slack and holds from lhs and rhs.
  void finish();
  double component(const std::string& name) const;
};

// Solver settings for the oracles: tight enough that a 1e-9 tightness
// witness is not swamped by iteration error.
SolverOptions oracle_solver_options();

struct RandomMdpSpec {
  std::size_t num_states = 10;
  std::size_t num_actions = 3;
  std::size_t num_rewards = 1;
  double gamma = 0.9;
};

// Dense transition rows drawn from Dirichlet(1), rewards r_k(s,a,s') uniform
// on [-1, 1].
TabularMdp random_mdp(const RandomMdpSpec& spec, std::mt19937_64& rng);
// Draws the shape too: 2..max_states states, 1..max_actions actions, gamma
// from {0.5, 0.9, 0.95}.
TabularMdp random_mdp(std::mt19937_64& rng, std::size_t max_states, std::size_t max_actions,
                      std::size_t num_rewards);
DeterministicPolicy random_policy(std::size_t num_states, std::size_t num_actions, std::mt19937_64& rng);
// r(s,a) uniform on [-1, 1].
RewardTable random_reward(std::size_t num_states, std::size_t num_actions, std::mt19937_64& rng);

enum class Perturbation {
  None,
  // Independent noise, uniform on [-eps, eps].
  Uniform,
  // +eps on every cell except the per-state GPI maximisers, which get
  // -eps, so that near-ties flip.
  Adversarial,
};

// Perturbs value tables in place according to `mode`.
void perturb(std::vector<QTable>& q, double epsilon, Perturbation mode, std::uint64_t seed);

// max_{s,a} |r_i(s,a) - r_j(s,a)|
double reward_distance(const RewardTable& a, const RewardTable& b);

// GPI over the (possibly perturbed) values of `policies` under `reward`,
// evaluated exactly: lhs = max_{s,a} (max_i Q^{pi_i} - Q^pi), rhs = 2 eps / (1 - gamma).
BoundReport check_gpi_theorem(const TabularMdp& mdp, std::span<const DeterministicPolicy> policies,
                              const RewardTable& reward, double epsilon, Perturbation mode,
                              std::uint64_t perturb_seed);

// ||Q_i^pi - Q_j^pi|| <= delta_ij / (1 - gamma)
BoundReport check_lemma1(const TabularMdp& mdp, const RewardTable& reward_i, const RewardTable& reward_j,
                         const DeterministicPolicy& policy);
// ||Q_i^* - Q_j^*|| <= delta_ij / (1 - gamma)
BoundReport check_lemma2(const TabularMdp& mdp, const RewardTable& reward_i, const RewardTable& reward_j);

// Target r, reference r_i, and basis rewards r_j (optimal policies of which
// feed GPI). Policies pi_j^* come from value iteration on r_j; their values on
// r_i are perturbed by eps, GPI acts on those, and the result is evaluated on r:
//   ||Q^* - Q^pi|| <= 2/(1-gamma) (||r - r_i|| + min_j ||r_i - r_j|| + eps)
BoundReport check_proposition1(const TabularMdp& mdp, const RewardTable& target, const RewardTable& reference,
                               std::span<const RewardTable> basis, double epsilon, Perturbation mode,
                               std::uint64_t perturb_seed);
// Same with the reference chosen as the least-squares projection of the
// target onto the span of the basis.
BoundReport check_proposition1_projected(const TabularMdp& mdp, const RewardTable& target,
                                         std::span<const RewardTable> basis, double epsilon, Perturbation mode,
                                         std::uint64_t perturb_seed);

struct SweepPoint {
  double alpha = 0.0;
  double distance = 0.0;  // ||r(alpha) - r_i||
  BoundReport report;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  bool all_hold = false;
  // lhs never decreases along the sweep (up to the report tolerance).
  bool monotone = false;
  // |lhs(a) - lhs(b)| <= 2/(1-gamma) |distance(a) - distance(b)| between
  // neighbours: the gap moves no faster than the reward does.
  bool lipschitz = false;
  // The same check as a report: lhs is the largest neighbour excess
  // |d lhs| - 2/(1-gamma) |d distance|, rhs is 0.
  BoundReport continuity;
};

// Walks r(alpha) = P + alpha (r_out - P) from the projection P of r_out onto
// the basis span out to r_out, with r_i = P throughout.
SweepResult proposition1_sweep(const TabularMdp& mdp, const RewardTable& outside, std::span<const RewardTable> basis,
                               std::size_t points = 5);

}  // namespace sfgpi
