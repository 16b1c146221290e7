#include "sfgpi/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "sfgpi/errors.hpp"

namespace sfgpi {

void GridConfig::validate() const {
  if (width <= 0 || height <= 0) throw ConfigError("grid width and height must be positive");
  if (num_object_types < 1) throw ConfigError("grid needs at least one object type");
  if (instances_per_type < 1) throw ConfigError("grid needs at least one instance per type");
  if (episode_length < 1) throw ConfigError("episode length must be positive");
  const long cells = static_cast<long>(width) * height;
  const long needed = static_cast<long>(num_object_types) * instances_per_type + 1;
  if (cells <= needed) {
    throw ConfigError("grid " + std::to_string(width) + "x" + std::to_string(height) + " has no room for " +
                      std::to_string(needed - 1) + " objects plus the agent and a free respawn cell");
  }
}

int destination(const GridConfig& config, int cell, Move move) {
  const int x = cell % config.width;
  const int y = cell / config.width;
  switch (move) {
    case Move::Up:
      return y > 0 ? cell - config.width : cell;
    case Move::Down:
      return y + 1 < config.height ? cell + config.width : cell;
    case Move::Left:
      return x > 0 ? cell - 1 : cell;
    case Move::Right:
      return x + 1 < config.width ? cell + 1 : cell;
  }
  throw UsageError("unknown move " + std::to_string(static_cast<int>(move)));
}

std::vector<int> free_cells(const GridConfig& config, const GridState& state) {
  std::vector<bool> used(static_cast<std::size_t>(config.num_cells()), false);
  used[static_cast<std::size_t>(state.agent)] = true;
  for (const auto& o : state.objects) used[static_cast<std::size_t>(o.cell)] = true;
  std::vector<int> out;
  for (int c = 0; c < config.num_cells(); ++c) {
    if (!used[static_cast<std::size_t>(c)]) out.push_back(c);
  }
  return out;
}

namespace {

// Partial Fisher-Yates over all cells: the first k entries are a uniform
// random ordered sample without replacement.
std::vector<int> sample_cells(int num_cells, int k, std::mt19937_64& rng) {
  std::vector<int> cells(static_cast<std::size_t>(num_cells));
  for (int i = 0; i < num_cells; ++i) cells[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, num_cells - 1);
    std::swap(cells[static_cast<std::size_t>(i)], cells[static_cast<std::size_t>(pick(rng))]);
  }
  cells.resize(static_cast<std::size_t>(k));
  return cells;
}

GridState place_uniform(const GridConfig& config, std::mt19937_64& rng) {
  const int total = config.num_object_types * config.instances_per_type;
  const auto cells = sample_cells(config.num_cells(), total + 1, rng);
  GridState state;
  state.agent = cells[0];
  state.objects.reserve(static_cast<std::size_t>(total));
  for (int t = 0; t < config.num_object_types; ++t) {
    for (int i = 0; i < config.instances_per_type; ++i) {
      state.objects.push_back(GridObject{cells[static_cast<std::size_t>(1 + t * config.instances_per_type + i)], t});
    }
  }
  return state;
}

}  // namespace

GridState reset(const GridConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  return place_uniform(config, rng);
}

GridWorld::GridWorld(GridConfig config, TaskVector task) : config_(config), task_(std::move(task)) {
  config_.validate();
  if (task_.dim() != static_cast<std::size_t>(config_.num_object_types)) {
    throw ConfigError("task has " + std::to_string(task_.dim()) + " weights but the grid has " +
                      std::to_string(config_.num_object_types) + " object types");
  }
}

void GridWorld::set_task(TaskVector task) {
  if (task.dim() != task_.dim()) throw UsageError("set_task: dimension mismatch");
  task_ = std::move(task);
}

const GridState& GridWorld::reset(std::uint64_t seed) {
  rng_.seed(seed);
  state_ = place_uniform(config_, rng_);
  started_ = true;
  return state_;
}

TransitionOutcome GridWorld::step(Move move) {
  if (!started_) throw UsageError("step before reset");
  if (done()) throw UsageError("step after the episode is done");

  TransitionOutcome out;
  out.feature.assign(static_cast<std::size_t>(config_.num_object_types), 0.0);
  state_.agent = destination(config_, state_.agent, move);

  auto hit = std::find_if(state_.objects.begin(), state_.objects.end(),
                          [&](const GridObject& o) { return o.cell == state_.agent; });
  if (hit != state_.objects.end()) {
    const int type = hit->type;
    out.collected_type = type;
    out.feature[static_cast<std::size_t>(type)] = 1.0;
    if (config_.respawn) {
      hit->cell = -1;  // excluded from the free-cell scan below
      GridState probe{state_.agent, {}, 0};
      for (const auto& o : state_.objects) {
        if (o.cell >= 0) probe.objects.push_back(o);
      }
      const auto empty = free_cells(config_, probe);
      std::uniform_int_distribution<std::size_t> pick(0, empty.size() - 1);
      hit->cell = empty[pick(rng_)];
    } else {
      state_.objects.erase(hit);
    }
  }
  ++state_.steps_elapsed;
  out.reward = task_.dot(out.feature);
  out.done = done();
  out.next_state = state_;
  return out;
}

// ---------------------------------------------------------------------------
// Enumeration

namespace {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

// Layouts of `types` object types over `free` cells.
double count_layouts(const GridConfig& config, int types, int free) {
  if (types == 0) return 1.0;
  const int inst = config.instances_per_type;
  if (config.respawn) return binomial(free, inst) * count_layouts(config, types - 1, free - inst);
  double total = 0.0;
  for (int k = 0; k <= inst; ++k) total += binomial(free, k) * count_layouts(config, types - 1, free - k);
  return total;
}

}  // namespace

double count_states(const GridConfig& config) {
  config.validate();
  const int cells = config.num_cells();
  return std::round(cells * count_layouts(config, config.num_object_types, cells - 1));
}

StateSpace::StateSpace(const GridConfig& config, std::size_t cap) : config_(config) {
  const double count = count_states(config);
  if (count > static_cast<double>(cap)) {
    throw SizeError("grid has " + std::to_string(static_cast<long double>(count)) +
                    " configurations, above the cap of " + std::to_string(cap) +
                    "; shrink the grid, the object types or the instances per type");
  }
  const int cells = config.num_cells();
  const int slots = 1 + config.num_object_types * config.instances_per_type;
  radix_ = static_cast<std::uint64_t>(cells) + 1;
  if (slots * std::log2(static_cast<double>(radix_)) >= 63.0) {
    throw SizeError("grid state key does not fit in 64 bits; shrink the configuration");
  }

  keys_.reserve(static_cast<std::size_t>(count));
  const int inst = config.instances_per_type;
  std::vector<bool> used(static_cast<std::size_t>(cells), false);
  GridState state;

  // Lexicographic enumeration: agent cell, then per type a sorted cell set.
  std::function<void(int)> place_type = [&](int type) {
    if (type == config.num_object_types) {
      const auto key = key_of(state);
      index_.emplace(key, static_cast<StateId>(keys_.size()));
      keys_.push_back(key);
      return;
    }
    const int min_count = config.respawn ? inst : 0;
    // Sizes in increasing order, then combinations in lexicographic order.
    for (int size = min_count; size <= inst; ++size) {
      std::function<void(int, int)> choose = [&](int start, int remaining) {
        if (remaining == 0) {
          place_type(type + 1);
          return;
        }
        for (int c = start; c < cells; ++c) {
          if (used[static_cast<std::size_t>(c)]) continue;
          used[static_cast<std::size_t>(c)] = true;
          state.objects.push_back(GridObject{c, type});
          choose(c + 1, remaining - 1);
          state.objects.pop_back();
          used[static_cast<std::size_t>(c)] = false;
        }
      };
      choose(0, size);
    }
  };
  for (int agent = 0; agent < cells; ++agent) {
    state.agent = agent;
    used[static_cast<std::size_t>(agent)] = true;
    place_type(0);
    used[static_cast<std::size_t>(agent)] = false;
  }
}

std::uint64_t StateSpace::key_of(const GridState& state) const {
  const int inst = config_.instances_per_type;
  const auto absent = radix_ - 1;
  std::uint64_t key = static_cast<std::uint64_t>(state.agent);
  std::vector<std::uint64_t> cells;
  for (int t = 0; t < config_.num_object_types; ++t) {
    cells.clear();
    for (const auto& o : state.objects) {
      if (o.type == t) cells.push_back(static_cast<std::uint64_t>(o.cell));
    }
    if (static_cast<int>(cells.size()) > inst) throw UsageError("state has too many objects of one type");
    std::sort(cells.begin(), cells.end());
    cells.resize(static_cast<std::size_t>(inst), absent);
    for (auto c : cells) key = key * radix_ + c;
  }
  return key;
}

StateId StateSpace::index_of(const GridState& state) const {
  auto it = index_.find(key_of(state));
  if (it == index_.end()) throw UsageError("state is not part of the enumerated space");
  return it->second;
}

GridState StateSpace::state_at(StateId s) const {
  if (s < 0 || static_cast<std::size_t>(s) >= keys_.size()) throw UsageError("state index out of range");
  std::uint64_t key = keys_[static_cast<std::size_t>(s)];
  const int inst = config_.instances_per_type;
  const int slots = config_.num_object_types * inst;
  std::vector<std::uint64_t> digits(static_cast<std::size_t>(slots));
  for (int i = slots - 1; i >= 0; --i) {
    digits[static_cast<std::size_t>(i)] = key % radix_;
    key /= radix_;
  }
  GridState state;
  state.agent = static_cast<int>(key);
  for (int i = 0; i < slots; ++i) {
    if (digits[static_cast<std::size_t>(i)] == radix_ - 1) continue;
    state.objects.push_back(GridObject{static_cast<int>(digits[static_cast<std::size_t>(i)]), i / inst});
  }
  return state;
}

TabularMdp enumerate_mdp(const GridConfig& config, std::span<const TaskVector> tasks, double gamma,
                         std::size_t cap) {
  return enumerate_mdp(StateSpace(config, cap), tasks, gamma);
}

TabularMdp enumerate_mdp(const StateSpace& space, std::span<const TaskVector> tasks, double gamma) {
  const GridConfig& config = space.config();
  for (const auto& w : tasks) {
    if (w.dim() != static_cast<std::size_t>(config.num_object_types)) {
      throw ConfigError("enumerate_mdp: task dimension does not match the object types");
    }
  }
  TabularMdp::Builder builder(space.size(), kNumMoves, tasks.size(), gamma);
  for (std::size_t s = 0; s < space.size(); ++s) {
    const GridState state = space.state_at(static_cast<StateId>(s));
    for (std::size_t a = 0; a < kNumMoves; ++a) {
      GridState next = state;
      next.agent = destination(config, state.agent, static_cast<Move>(a));
      const auto hit = std::find_if(next.objects.begin(), next.objects.end(),
                                    [&](const GridObject& o) { return o.cell == next.agent; });
      const auto sid = static_cast<StateId>(s);
      const auto aid = static_cast<ActionId>(a);
      if (hit == next.objects.end()) {
        builder.add_transition(sid, aid, space.index_of(next), 1.0);
        continue;
      }
      const int type = hit->type;
      std::vector<StateId> successors;
      if (config.respawn) {
        GridObject& moved = *hit;
        next.objects.erase(hit);
        const auto empty = free_cells(config, next);
        GridState landed = next;
        landed.objects.push_back(GridObject{-1, type});
        for (int c : empty) {
          landed.objects.back().cell = c;
          successors.push_back(space.index_of(landed));
        }
        (void)moved;
      } else {
        next.objects.erase(hit);
        successors.push_back(space.index_of(next));
      }
      const double p = 1.0 / static_cast<double>(successors.size());
      for (StateId nxt : successors) {
        builder.add_transition(sid, aid, nxt, p);
        for (std::size_t k = 0; k < tasks.size(); ++k) {
          builder.set_reward(k, sid, aid, nxt, tasks[k][static_cast<std::size_t>(type)]);
        }
      }
    }
  }
  return builder.build();
}

}  // namespace sfgpi
