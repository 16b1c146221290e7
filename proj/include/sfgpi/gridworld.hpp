#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "sfgpi/features.hpp"
#include "sfgpi/mdp.hpp"

namespace sfgpi {

// Room of typed objects. Picking an object up yields the one-hot feature of
// its type and, with respawn, a fresh object of that type appears on a
// uniformly random free cell.
struct GridConfig {
  int width = 13;
  int height = 13;
  int num_object_types = 4;
  int instances_per_type = 5;
  int episode_length = 200;
  bool respawn = true;
  std::uint64_t rng_seed = 0;

  int num_cells() const noexcept { return width * height; }
  // Throws ConfigError.
  void validate() const;

  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

enum class Move : ActionId { Up = 0, Down = 1, Left = 2, Right = 3 };
inline constexpr std::size_t kNumMoves = 4;

struct GridObject {
  int cell;
  int type;
  friend bool operator==(const GridObject&, const GridObject&) = default;
};

struct GridState {
  int agent = 0;  // cell index y * width + x
  std::vector<GridObject> objects;
  int steps_elapsed = 0;

  friend bool operator==(const GridState&, const GridState&) = default;
};

struct TransitionOutcome {
  GridState next_state;
  std::vector<double> feature;  // one-hot of the collected type, or zeros
  double reward = 0.0;
  bool done = false;
  int collected_type = -1;
};

// Single-owner environment instance. Deterministic given (config, seed).
class GridWorld {
 public:
  GridWorld(GridConfig config, TaskVector task);

  const GridConfig& config() const noexcept { return config_; }
  const TaskVector& task() const noexcept { return task_; }
  void set_task(TaskVector task);

  const GridState& reset(std::uint64_t seed);
  // Throws UsageError once the episode is over.
  TransitionOutcome step(Move move);
  TransitionOutcome step(ActionId action) { return step(static_cast<Move>(action)); }

  const GridState& state() const noexcept { return state_; }
  bool done() const noexcept { return state_.steps_elapsed >= config_.episode_length; }

 private:
  GridConfig config_;
  TaskVector task_;
  GridState state_;
  std::mt19937_64 rng_;
  bool started_ = false;
};

GridState reset(const GridConfig& config, std::uint64_t seed);

// Cell reached from `cell` by `move`; walls leave the position unchanged.
int destination(const GridConfig& config, int cell, Move move);
// Cells holding neither an object nor the agent, in increasing order.
std::vector<int> free_cells(const GridConfig& config, const GridState& state);

// Number of (agent, object layout) configurations, as a floating count so
// oversized rooms can be rejected without overflow.
double count_states(const GridConfig& config);

// Dense indexing of every reachable configuration; the step counter is not
// part of the state. Throws SizeError above `cap` states.
class StateSpace {
 public:
  static constexpr std::size_t kDefaultCap = 200'000;

  explicit StateSpace(const GridConfig& config, std::size_t cap = kDefaultCap);

  const GridConfig& config() const noexcept { return config_; }
  std::size_t size() const noexcept { return keys_.size(); }
  StateId index_of(const GridState& state) const;
  // steps_elapsed is 0 in the returned state.
  GridState state_at(StateId s) const;

 private:
  std::uint64_t key_of(const GridState& state) const;

  GridConfig config_;
  std::uint64_t radix_ = 0;
  std::vector<std::uint64_t> keys_;
  std::unordered_map<std::uint64_t, StateId> index_;
};

// Exact MDP of the room: one reward table per task, each r_k(s,a,s') =
// phi(s,a,s')^T w_k, respawn as uniform stochastic branching. Throws
// SizeError when the state count exceeds `cap`.
TabularMdp enumerate_mdp(const GridConfig& config, std::span<const TaskVector> tasks, double gamma,
                         std::size_t cap = StateSpace::kDefaultCap);
TabularMdp enumerate_mdp(const StateSpace& space, std::span<const TaskVector> tasks, double gamma);

}  // namespace sfgpi
