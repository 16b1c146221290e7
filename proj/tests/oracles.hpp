#pragma once

// Reference computations that share no code with the library solvers.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "sfgpi/mdp.hpp"

namespace oracle {

// Q^pi from the linear system (I - gamma P_pi) Q = r over (s,a) pairs.
inline sfgpi::QTable solve_q(const sfgpi::TabularMdp& m, const sfgpi::DeterministicPolicy& pi,
                             const sfgpi::RewardTable& r) {
  const auto S = static_cast<Eigen::Index>(m.num_states());
  const auto A = static_cast<Eigen::Index>(m.num_actions());
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S * A, S * A);
  Eigen::VectorXd b(S * A);
  for (Eigen::Index s = 0; s < S; ++s) {
    for (Eigen::Index a = 0; a < A; ++a) {
      const Eigen::Index row = s * A + a;
      b(row) = r(static_cast<std::size_t>(s), static_cast<std::size_t>(a));
      for (const auto& o : m.outcomes(static_cast<sfgpi::StateId>(s), static_cast<sfgpi::ActionId>(a))) {
        const Eigen::Index col = static_cast<Eigen::Index>(o.next) * A + pi(o.next);
        M(row, col) -= m.gamma() * o.prob;
      }
    }
  }
  const Eigen::VectorXd q = M.partialPivLu().solve(b);
  sfgpi::QTable out(m.num_states(), m.num_actions());
  for (Eigen::Index i = 0; i < S * A; ++i) out.values()[static_cast<std::size_t>(i)] = q(i);
  return out;
}

// Q* as the pointwise max over every deterministic policy (tiny MDPs only).
inline sfgpi::QTable brute_force_optimal(const sfgpi::TabularMdp& m, const sfgpi::RewardTable& r) {
  const std::size_t S = m.num_states(), A = m.num_actions();
  sfgpi::QTable best(S, A, -std::numeric_limits<double>::infinity());
  std::vector<sfgpi::ActionId> acts(S, 0);
  for (;;) {
    const sfgpi::QTable q = solve_q(m, sfgpi::DeterministicPolicy(acts), r);
    for (std::size_t k = 0; k < q.size(); ++k) best.values()[k] = std::max(best.values()[k], q.values()[k]);
    std::size_t i = 0;
    while (i < S && ++acts[i] == static_cast<sfgpi::ActionId>(A)) acts[i++] = 0;
    if (i == S) break;
  }
  return best;
}

// Shortest path lengths on a width x height 4-connected grid without walls.
inline std::vector<int> bfs_distances(int width, int height, int goal) {
  std::vector<int> d(static_cast<std::size_t>(width * height), -1);
  std::queue<int> q;
  d[static_cast<std::size_t>(goal)] = 0;
  q.push(goal);
  while (!q.empty()) {
    const int c = q.front();
    q.pop();
    const int x = c % width, y = c / width;
    const int nb[4][2] = {{x, y - 1}, {x, y + 1}, {x - 1, y}, {x + 1, y}};
    for (const auto& p : nb) {
      if (p[0] < 0 || p[0] >= width || p[1] < 0 || p[1] >= height) continue;
      const int n = p[1] * width + p[0];
      if (d[static_cast<std::size_t>(n)] < 0) {
        d[static_cast<std::size_t>(n)] = d[static_cast<std::size_t>(c)] + 1;
        q.push(n);
      }
    }
  }
  return d;
}

}  // namespace oracle
