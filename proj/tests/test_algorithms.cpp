#include <doctest.h>

#include <memory>
#include <numeric>
#include <random>

#include "sfgpi/algorithms.hpp"
#include "sfgpi/errors.hpp"

using namespace sfgpi;

namespace {

TaskVector tv(std::initializer_list<double> v) { return TaskVector(std::vector<double>(v)); }

GridConfig room(bool respawn = true) {
  GridConfig g;
  g.width = 3;
  g.height = 3;
  g.num_object_types = 2;
  g.instances_per_type = 1;
  g.respawn = respawn;
  g.episode_length = respawn ? 100 : 50;
  return g;
}

std::vector<TaskVector> canonical2() { return {TaskVector::unit(2, 0), TaskVector::unit(2, 1)}; }

// Library of the DP-optimal base policies with exact successor features and
// an exact reward model.
std::shared_ptr<PolicyLibrary> exact_library(const TabularMdp& mdp) {
  const std::size_t S = mdp.num_states(), A = mdp.num_actions();
  auto lib = std::make_shared<PolicyLibrary>();
  lib->base_tasks = TaskMatrix(canonical2());
  lib->reward_model = RewardModel(2, S, A, 1.0);
  for (std::size_t k = 0; k < 2; ++k) {
    const RewardTable r = mdp.expected_reward(k);
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a)
        lib->reward_model.update(k, static_cast<StateId>(s), static_cast<ActionId>(a), r(s, a));
  }
  for (std::size_t i = 0; i < 2; ++i) {
    const DeterministicPolicy pi = greedy_policy(value_iteration(mdp, i));
    SfTable t(S, A, 2, "base" + std::to_string(i));
    for (std::size_t j = 0; j < 2; ++j) t.set_component(j, evaluate_policy_exact(mdp, pi, j));
    lib->append(std::move(t));
  }
  return lib;
}

double mean_return(const RunLog& log, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += log.episodes[i].ret;
  return s / static_cast<double>(to - from);
}

}  // namespace

TEST_CASE("one base task reduces basis building to Q(lambda)") {
  const GridConfig g = room();
  const StateSpace sp(g);
  RunSetup setup;
  setup.space = &sp;
  setup.seed = 12;
  setup.mode = ExecutionMode::Sequential;
  Hyperparams h;
  h.total_steps = 50000;
  h.epsilon = {0.5, 0.1, 20000};
  const BasisResult b = algorithm2_run(TaskMatrix(std::vector<TaskVector>{tv({1, 0})}), setup, h);
  const BaselineResult q = qlambda_run(tv({1, 0}), setup, h);
  CHECK(b.library.tables[0].component(0).values() == q.q.values());
  REQUIRE(b.run.log.episodes.size() == q.run.log.episodes.size());
  for (std::size_t i = 0; i < q.run.log.episodes.size(); ++i)
    CHECK(b.run.log.episodes[i].ret == q.run.log.episodes[i].ret);
}

TEST_CASE("basis building matches dynamic programming on the deterministic room") {
  const GridConfig g = room(false);
  const StateSpace sp(g);
  const TabularMdp mdp = enumerate_mdp(sp, canonical2(), 0.9);
  RunSetup setup;
  setup.space = &sp;
  setup.seed = 1;
  setup.mode = ExecutionMode::Sequential;
  Hyperparams h;
  h.alpha_q = 1.0;
  h.lambda = 0.5;
  h.epsilon = {0.5, 0.3, 4'000'000};
  h.total_steps = 8'000'000;
  const BasisResult b = algorithm2_run(TaskMatrix(canonical2()), setup, h);
  CHECK(b.run.log.warnings.empty());
  for (std::size_t i = 0; i < 2; ++i) {
    const QTable opt = value_iteration(mdp, i);
    CHECK(sup_distance(b.library.tables[i].component(i), opt) < 0.1);
    const DeterministicPolicy pi = greedy_policy(b.library.tables[i].component(i));
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(sup_distance(b.library.tables[i].component(j), evaluate_policy_exact(mdp, pi, j)) < 0.1);
    }
  }
  // Returns climb, and late episodes reach most of what is attainable: one
  // object of the active type is always reachable within the episode.
  const auto& eps = b.run.log.episodes;
  const std::size_t n = eps.size();
  REQUIRE(n > 100);
  CHECK(mean_return(b.run.log, n - n / 10, n) > mean_return(b.run.log, 0, n / 10));
  CHECK(mean_return(b.run.log, n - n / 10, n) >= 0.8);
}

TEST_CASE("pipelined basis building agrees with the sequential run") {
  const GridConfig g = room(false);
  const StateSpace sp(g);
  const TabularMdp mdp = enumerate_mdp(sp, canonical2(), 0.9);
  RunSetup setup;
  setup.space = &sp;
  setup.seed = 3;
  Hyperparams h;
  h.alpha_q = 1.0;
  h.lambda = 0.5;
  h.epsilon = {0.5, 0.3, 4'000'000};
  h.total_steps = 8'000'000;
  setup.mode = ExecutionMode::Sequential;
  const BasisResult seq = algorithm2_run(TaskMatrix(canonical2()), setup, h);
  setup.mode = ExecutionMode::Pipeline;
  setup.actors_per_task = 2;
  const BasisResult par = algorithm2_run(TaskMatrix(canonical2()), setup, h);
  REQUIRE(par.run.stats.has_value());
  CHECK(par.run.stats->audit_ok);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(sup_distance(seq.library.tables[i].component(i), par.library.tables[i].component(i)) < 0.15);
  }
}

TEST_CASE("gpi over e_t matches the basis-building action rule") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<SfTable> lib(3, SfTable(10, 4, 3));
  for (auto& t : lib)
    for (auto& v : t.values()) v = u(rng);
  std::vector<const SfTable*> p;
  for (const auto& t : lib) p.push_back(&t);
  for (std::size_t j = 0; j < 3; ++j) {
    for (StateId s = 0; s < 10; ++s) {
      const GpiChoice a = gpi_action(s, p, TaskVector::unit(3, j));
      const GpiChoice b = gpi_action_component(s, p, j);
      CHECK(a.action == b.action);
      CHECK(a.policy == b.policy);
    }
  }
}

TEST_CASE("transfer with an exact library") {
  const GridConfig g = room();
  const StateSpace sp(g);
  std::vector<TaskVector> tasks = canonical2();
  tasks.push_back(tv({1, 1}));
  const TabularMdp mdp = enumerate_mdp(sp, tasks, 0.9);
  const auto lib = exact_library(mdp);

  SUBCASE("a base task is solved by gpi at once") {
    std::vector<const SfTable*> p{&lib->tables[0], &lib->tables[1]};
    const QTable q = evaluate_policy_exact(mdp, gpi_policy(p, tv({1, 0})), 0);
    CHECK(sup_distance(q, value_iteration(mdp, 0)) < 1e-8);
  }
  SUBCASE("w converges to the task weights") {
    RunSetup setup;
    setup.space = &sp;
    setup.seed = 2;
    setup.mode = ExecutionMode::Sequential;
    Hyperparams h;
    h.alpha_w = 0.05;
    h.total_steps = 100000;
    h.epsilon = {0.5, 0.05, 50000};
    const TransferResult r = algorithm1_run(lib, tv({1, 1}), setup, h, false);
    CHECK(std::abs(r.w[0] - 1.0) < 0.05);
    CHECK(std::abs(r.w[1] - 1.0) < 0.05);
    CHECK_FALSE(r.new_table.has_value());
    // Library policies only.
    for (const auto& ep : r.run.log.episodes) CHECK(ep.selection_counts.size() == 2);
  }
  SUBCASE("continual mode learns a new table") {
    RunSetup setup;
    setup.space = &sp;
    setup.seed = 5;
    setup.mode = ExecutionMode::Sequential;
    Hyperparams h;
    h.total_steps = 300000;
    h.epsilon = {0.5, 0.05, 100000};
    const TransferResult r = algorithm1_run(lib, tv({-1, -1}), setup, h, true);
    REQUIRE(r.new_table.has_value());
    CHECK(r.new_table->all_finite());
    const auto& eps = r.run.log.episodes;
    const std::size_t n = eps.size();
    REQUIRE(n >= 20);
    // The SF error falls and the new policy takes over selection.
    auto loss = [&](std::size_t a, std::size_t b) {
      double s = 0.0;
      for (std::size_t i = a; i < b; ++i) s += eps[i].sf_loss.value_or(0.0);
      return s / static_cast<double>(b - a);
    };
    auto share = [&](std::size_t a, std::size_t b) {
      double mine = 0.0, all = 0.0;
      for (std::size_t i = a; i < b; ++i) {
        REQUIRE(eps[i].selection_counts.size() == 3);
        mine += static_cast<double>(eps[i].selection_counts[2]);
        all += static_cast<double>(std::accumulate(eps[i].selection_counts.begin(), eps[i].selection_counts.end(),
                                                   std::uint64_t{0}));
      }
      return all > 0 ? mine / all : 0.0;
    };
    CHECK(loss(n - n / 5, n) < loss(0, n / 5));
    CHECK(share(n - n / 5, n) > share(0, n / 5));
  }
  SUBCASE("mismatched library") {
    const GridConfig big = [] {
      GridConfig x = room();
      x.width = 4;
      return x;
    }();
    const StateSpace other(big);
    RunSetup setup;
    setup.space = &other;
    CHECK_THROWS_AS(algorithm1_run(lib, tv({1, 1}), setup, Hyperparams{}, false), ConfigError);
  }
}

TEST_CASE("Q(lambda) approaches the optimal policy") {
  const GridConfig g = room(false);
  const StateSpace sp(g);
  const TabularMdp mdp = enumerate_mdp(sp, canonical2(), 0.9);
  RunSetup setup;
  setup.space = &sp;
  setup.seed = 8;
  setup.mode = ExecutionMode::Sequential;
  Hyperparams h;
  h.alpha_q = 1.0;
  h.total_steps = 2'000'000;
  h.epsilon = {0.5, 0.3, 1'000'000};
  const BaselineResult r = qlambda_run(tv({1, 0}), setup, h);
  // Cells the task never reaches stay at zero, so compare greedy values
  // from start states only.
  const QTable opt = value_iteration(mdp, 0);
  const QTable got = evaluate_policy_exact(mdp, greedy_policy(r.q), 0);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = static_cast<std::size_t>(sp.index_of(reset(g, seed)));
    const double v_opt = *std::max_element(opt.row(s).begin(), opt.row(s).end());
    CHECK(got(s, static_cast<std::size_t>(argmax(r.q.row(s)))) >= v_opt - 0.05);
  }
}

TEST_CASE("random baseline") {
  const GridConfig g = room();
  const StateSpace sp(g);
  RunSetup setup;
  setup.space = &sp;
  setup.seed = 1;
  setup.mode = ExecutionMode::Sequential;
  const RunOutput out = random_run(tv({1, 1}), setup, 10000);
  CHECK(out.log.episodes.size() == 100);
  CHECK(out.log.consumed_steps == 10000);
  for (const auto& ep : out.log.episodes) CHECK(ep.ret >= 0.0);
}

TEST_CASE("basis dimension must match the room") {
  const GridConfig g = room();
  const StateSpace sp(g);
  RunSetup setup;
  setup.space = &sp;
  CHECK_THROWS_AS(algorithm2_run(TaskMatrix(std::vector<TaskVector>{tv({1, 0, 0})}), setup, Hyperparams{}),
                  ConfigError);
  RunSetup none;
  CHECK_THROWS_AS(algorithm2_run(TaskMatrix(canonical2()), none, Hyperparams{}), UsageError);
}
