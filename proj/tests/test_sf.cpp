#include <doctest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "sfgpi/errors.hpp"
#include "sfgpi/gridworld.hpp"
#include "sfgpi/sf.hpp"

using namespace sfgpi;

namespace {

TaskVector tv(std::initializer_list<double> v) { return TaskVector(std::vector<double>(v)); }

std::vector<const SfTable*> ptrs(const std::vector<SfTable>& t) {
  std::vector<const SfTable*> out;
  for (const auto& x : t) out.push_back(&x);
  return out;
}

SfTable random_table(std::size_t S, std::size_t A, std::size_t D, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  SfTable t(S, A, D);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

GridConfig room() {
  GridConfig g;
  g.width = 3;
  g.height = 3;
  g.num_object_types = 2;
  g.instances_per_type = 1;
  return g;
}

}  // namespace

TEST_CASE("sf table basics") {
  SfTable t(2, 2, 3, "p");
  t(1, 0, 0) = 1;
  t(1, 0, 2) = 2;
  CHECK(t.q(1, 0, tv({0.5, 1, -1})) == -1.5);
  CHECK(q_from_sf(t.at(1, 0), tv({0.5, 1, -1})) == -1.5);
  CHECK(q_from_sf(t.at(1, 0), TaskVector::unit(3, 2)) == 2.0);
  CHECK(t.greedy(1, TaskVector::unit(3, 2)) == 0);
  CHECK(t.greedy(1, tv({-1, 0, 0})) == 1);
  CHECK(t.greedy(0, tv({1, 1, 1})) == 0);  // all tied
  QTable c = t.component(2);
  CHECK(c(1, 0) == 2.0);
  c(0, 1) = 7;
  t.set_component(2, c);
  CHECK(t(0, 1, 2) == 7.0);
  CHECK(t.q_table(tv({0, 0, 1}))(0, 1) == 7.0);
  CHECK_THROWS_AS(t.q_table(tv({1, 1})), UsageError);
  CHECK(t.all_finite());
  t(0, 0, 0) = std::nan("");
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("gpi action selection") {
  std::mt19937_64 rng(5);
  SUBCASE("one policy is plain greedy") {
    const std::vector<SfTable> lib{random_table(6, 4, 3, rng)};
    const TaskVector w = tv({0.3, -1, 2});
    for (StateId s = 0; s < 6; ++s) {
      const GpiChoice c = gpi_action(s, ptrs(lib), w);
      CHECK(c.action == lib[0].greedy(s, w));
      CHECK(c.policy == 0);
    }
  }
  SUBCASE("dominating table wins") {
    std::vector<SfTable> lib{SfTable(1, 3, 2), SfTable(1, 3, 2)};
    lib[0](0, 0, 0) = 1;
    lib[1](0, 2, 0) = 5;
    const GpiChoice c = gpi_action(0, ptrs(lib), tv({1, 0}));
    CHECK(c.action == 2);
    CHECK(c.policy == 1);
    CHECK(c.value == 5.0);
  }
  SUBCASE("ties go to the lowest policy then action") {
    std::vector<SfTable> lib{SfTable(1, 3, 1), SfTable(1, 3, 1)};
    lib[0](0, 2, 0) = 1;
    lib[1](0, 0, 0) = 1;
    const GpiChoice c = gpi_action(0, ptrs(lib), tv({1}));
    CHECK(c.policy == 0);
    CHECK(c.action == 2);
    const GpiChoice z = gpi_action(0, ptrs(lib), tv({0}));
    CHECK(z.policy == 0);
    CHECK(z.action == 0);
  }
  SUBCASE("scaling w keeps the selection") {
    const std::vector<SfTable> lib{random_table(8, 4, 3, rng), random_table(8, 4, 3, rng), random_table(8, 4, 3, rng)};
    std::uniform_real_distribution<double> u(-1, 1);
    for (int rep = 0; rep < 50; ++rep) {
      const TaskVector w = tv({u(rng), u(rng), u(rng)});
      for (double k : {0.25, 3.0, 1e3}) {
        TaskVector wk = w;
        for (std::size_t j = 0; j < 3; ++j) wk[j] *= k;
        for (StateId s = 0; s < 8; ++s) {
          const GpiChoice a = gpi_action(s, ptrs(lib), w), b = gpi_action(s, ptrs(lib), wk);
          CHECK(a.action == b.action);
          CHECK(a.policy == b.policy);
        }
      }
    }
  }
  SUBCASE("component selection") {
    std::vector<SfTable> lib{SfTable(1, 2, 2), SfTable(1, 2, 2)};
    lib[1](0, 1, 1) = 3;
    const GpiChoice c = gpi_action_component(0, ptrs(lib), 1);
    CHECK(c.policy == 1);
    CHECK(c.action == 1);
    CHECK_THROWS_AS(gpi_action_component(0, ptrs(lib), 2), UsageError);
  }
  SUBCASE("errors") {
    const std::vector<SfTable> none;
    CHECK_THROWS_AS(gpi_action(0, ptrs(none), tv({1})), UsageError);
    const std::vector<SfTable> lib{SfTable(1, 2, 2)};
    CHECK_THROWS_AS(gpi_action(0, ptrs(lib), tv({1, 2, 3})), UsageError);
  }
}

TEST_CASE("exact successor features on the room") {
  const GridConfig g = room();
  const std::vector<TaskVector> tasks{TaskVector::unit(2, 0), TaskVector::unit(2, 1), tv({1, -1})};
  const TabularMdp mdp = enumerate_mdp(g, tasks, 0.9);
  const std::size_t S = mdp.num_states(), A = mdp.num_actions();
  std::vector<SfTable> lib;
  std::vector<DeterministicPolicy> pis;
  for (std::size_t i = 0; i < 2; ++i) {
    pis.push_back(greedy_policy(value_iteration(mdp, i)));
    SfTable t(S, A, 2);
    for (std::size_t j = 0; j < 2; ++j) t.set_component(j, evaluate_policy_exact(mdp, pis[i], j));
    lib.push_back(std::move(t));
  }
  // psi^T w reproduces the value of the same policy on the combined task.
  const TaskVector w = tasks[2];
  for (std::size_t i = 0; i < 2; ++i) {
    const QTable direct = oracle::solve_q(mdp, pis[i], mdp.expected_reward(2));
    CHECK(sup_distance(lib[i].q_table(w), direct) < 1e-8);
  }
  // GPI dominates both component policies pointwise.
  const QTable gpi = evaluate_policy_exact(mdp, gpi_policy(ptrs(lib), w), 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const QTable qi = lib[i].q_table(w);
    double worst = 0.0;
    for (std::size_t k = 0; k < gpi.size(); ++k) worst = std::max(worst, qi.values()[k] - gpi.values()[k]);
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("w update") {
  TaskVector w = tv({0, 0});
  const std::vector<double> phi{1, 0};
  w_update(w, phi, 1.0, 0.1);
  CHECK(w[0] == doctest::Approx(0.1));
  CHECK(w[1] == 0.0);
  const TaskVector before = w;
  w_update(w, std::vector<double>{0, 0}, 5.0, 0.1);
  CHECK(w == before);
}

TEST_CASE("w converges on an exactly representable task") {
  GridConfig g;
  g.width = 3;
  g.height = 3;
  g.num_object_types = 4;
  g.instances_per_type = 1;
  const StateSpace sp(g);
  const TaskVector target = tv({1, 1, 0, 0});
  std::vector<TaskVector> basis;
  for (std::size_t j = 0; j < 4; ++j) basis.push_back(TaskVector::unit(4, j));
  std::mt19937_64 rng(9);
  GridWorld env(g, target);
  TaskVector w(std::vector<double>(4, 0.0));
  env.reset(rng());
  for (int t = 0; t < 100000; ++t) {
    if (env.done()) env.reset(rng());
    const auto a = static_cast<ActionId>(rng() % 4);
    const TransitionOutcome r = env.step(a);
    w_update(w, r.feature, r.reward, 0.05);
  }
  for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(w[j] - target[j]) < 0.05);
}

TEST_CASE("traces") {
  TraceTable e(3, 2, 0.5);
  CHECK_FALSE(e.active());
  e.accumulate(1, 1);
  e.accumulate(1, 1);
  e.accumulate(0, 0);
  CHECK(e(1, 1) == 2.0);
  CHECK(e.active_count() == 2);
  e.decay(0.5);
  CHECK(e(1, 1) == 1.0);
  CHECK(e(0, 0) == 0.5);
  for (int k = 0; k < 40; ++k) e.decay(0.5);
  CHECK(e(1, 1) == 0.0);
  CHECK_FALSE(e.active());
  e.accumulate(2, 0);
  e.clear();
  CHECK(e(2, 0) == 0.0);
  CHECK_FALSE(e.active());
  CHECK_THROWS_AS(TraceTable(1, 1, 1.5), ConfigError);

  // Revisiting one cell forever keeps the trace below 1/(1 - gamma lambda).
  TraceTable f(1, 1, 0.8);
  const double gamma = 0.9;
  double peak = 0.0;
  for (int k = 0; k < 500; ++k) {
    f.accumulate(0, 0);
    peak = std::max(peak, f(0, 0));
    f.decay(gamma * 0.8);
  }
  CHECK(peak <= 1.0 / (1.0 - gamma * 0.8) + 1e-9);
  CHECK(peak > 1.0 / (1.0 - gamma * 0.8) - 1e-6);
}

TEST_CASE("step sizes and epsilon schedule") {
  StepSizes c(0.3);
  CHECK(c.at(5) == 0.3);
  StepSizes d(4, 0.5, 1.0);
  CHECK(d.at(2) == 0.5);
  d.visit(2);
  d.visit(2);
  d.visit(2);
  d.visit(2);
  CHECK(d.at(2) == doctest::Approx(0.125));
  CHECK(d.at(1) == 0.5);

  EpsilonSchedule eps{0.5, 0.05, 100};
  CHECK(eps.at(0) == 0.5);
  CHECK(eps.at(50) == doctest::Approx(0.275));
  CHECK(eps.at(100) == 0.05);
  CHECK(eps.at(1'000'000) == 0.05);
  EpsilonSchedule flat{0.2, 0.2, 0};
  CHECK(flat.at(7) == 0.2);
}

TEST_CASE("hyperparameter validation") {
  Hyperparams h;
  CHECK_NOTHROW(h.validate());
  auto bad = [](auto f) {
    Hyperparams x;
    f(x);
    CHECK_THROWS_AS(x.validate(), ConfigError);
  };
  bad([](Hyperparams& x) { x.alpha_psi = 0; });
  bad([](Hyperparams& x) { x.alpha_w = 1.5; });
  bad([](Hyperparams& x) { x.alpha_q = -0.1; });
  bad([](Hyperparams& x) { x.alpha_r = 0; });
  bad([](Hyperparams& x) { x.epsilon.start = 1.2; });
  bad([](Hyperparams& x) { x.epsilon.end = -0.1; });
  bad([](Hyperparams& x) { x.lambda = 2; });
  bad([](Hyperparams& x) { x.gamma = 1.0; });
  bad([](Hyperparams& x) { x.total_steps = 0; });
  bad([](Hyperparams& x) { x.alpha_decay = -1; });
}

TEST_CASE("sf td update") {
  SUBCASE("lambda 0 moves a single cell") {
    SfTable psi(3, 2, 2);
    psi(1, 0, 0) = 1.0;
    psi(2, 1, 1) = 2.0;
    TraceTable e(3, 2, 0.0);
    std::vector<double> delta(2);
    const std::vector<double> phi{0.5, 0.0};
    sf_td_update(psi, e, {1, 0, 2}, 1, phi, StepSizes(0.1), 0.9, true, delta);
    CHECK(delta[0] == doctest::Approx(0.5 - 1.0));
    CHECK(delta[1] == doctest::Approx(0.9 * 2.0));
    CHECK(psi(1, 0, 0) == doctest::Approx(1.0 - 0.05));
    CHECK(psi(1, 0, 1) == doctest::Approx(0.18));
    CHECK(psi(2, 1, 1) == 2.0);
    CHECK(psi(0, 0, 0) == 0.0);
    CHECK_FALSE(e.active());
  }
  SUBCASE("terminal next state does not bootstrap") {
    SfTable psi(2, 1, 1);
    psi(1, 0, 0) = 10.0;
    TraceTable e(2, 1, 0.0);
    std::vector<double> delta(1);
    sf_td_update(psi, e, {0, 0, 1, true}, 0, std::vector<double>{1.0}, StepSizes(1.0), 0.9, true, delta);
    CHECK(psi(0, 0, 0) == 1.0);
  }
  SUBCASE("off-policy action cuts the trace") {
    SfTable psi(3, 1, 1);
    TraceTable e(3, 1, 1.0);
    std::vector<double> delta(1);
    sf_td_update(psi, e, {0, 0, 1}, 0, std::vector<double>{0.0}, StepSizes(0.1), 0.9, true, delta);
    CHECK(e(0, 0) > 0.0);
    sf_td_update(psi, e, {1, 0, 2}, 0, std::vector<double>{1.0}, StepSizes(0.1), 0.9, false, delta);
    CHECK(e(0, 0) == 0.0);
    CHECK(psi(0, 0, 0) == 0.0);
    CHECK(psi(1, 0, 0) == doctest::Approx(0.1));
  }
  SUBCASE("trace carries the error back") {
    SfTable psi(3, 1, 1);
    TraceTable e(3, 1, 1.0);
    std::vector<double> delta(1);
    sf_td_update(psi, e, {0, 0, 1}, 0, std::vector<double>{0.0}, StepSizes(0.5), 0.9, true, delta);
    sf_td_update(psi, e, {1, 0, 2}, 0, std::vector<double>{1.0}, StepSizes(0.5), 0.9, true, delta);
    CHECK(psi(1, 0, 0) == doctest::Approx(0.5));
    CHECK(psi(0, 0, 0) == doctest::Approx(0.5 * 0.9));
  }
  SUBCASE("non-finite error diverges") {
    SfTable psi(2, 1, 1);
    TraceTable e(2, 1, 0.0);
    std::vector<double> delta(1);
    CHECK_THROWS_AS(sf_td_update(psi, e, {0, 0, 1}, 0, std::vector<double>{INFINITY}, StepSizes(0.1), 0.9, true, delta),
                    DivergenceError);
    CHECK_THROWS_AS(sf_td_update(psi, e, {0, 0, 1}, 0, std::vector<double>{1, 2}, StepSizes(0.1), 0.9, true, delta),
                    UsageError);
  }
  SUBCASE("two-state chain converges to the discounted feature sum") {
    // 0 -> 1 -> 0 -> ..., phi(0) = (1,0), phi(1) = (0,1).
    const double gamma = 0.9;
    SfTable psi(2, 1, 2);
    TraceTable e(2, 1, 0.5);
    std::vector<double> delta(2);
    StateId s = 0;
    for (int t = 0; t < 20000; ++t) {
      const StateId n = 1 - s;
      const std::vector<double> phi{s == 0 ? 1.0 : 0.0, s == 1 ? 1.0 : 0.0};
      sf_td_update(psi, e, {s, 0, n}, 0, phi, StepSizes(0.05), gamma, true, delta);
      s = n;
    }
    const double near = 1.0 / (1.0 - gamma * gamma), far = gamma / (1.0 - gamma * gamma);
    CHECK(std::abs(psi(0, 0, 0) - near) < 1e-3);
    CHECK(std::abs(psi(0, 0, 1) - far) < 1e-3);
    CHECK(std::abs(psi(1, 0, 1) - near) < 1e-3);
    CHECK(std::abs(psi(1, 0, 0) - far) < 1e-3);
  }
  SUBCASE("component t with w = e_t is a Q-learning update") {
    std::mt19937_64 rng(3);
    SfTable psi = random_table(4, 3, 2, rng);
    QTable q = psi.component(1);
    TraceTable e(4, 3, 0.0);
    std::vector<double> delta(2);
    const StateId s = 2, n = 3;
    const ActionId a = 1;
    const ActionId a_next = psi.greedy(n, TaskVector::unit(2, 1));
    const double r = 0.7;
    const double target = r + 0.9 * *std::max_element(q.row(n).begin(), q.row(n).end());
    const double expected = q(s, a) + 0.2 * (target - q(s, a));
    sf_td_update(psi, e, {s, a, n}, a_next, std::vector<double>{0.1, r}, StepSizes(0.2), 0.9, true, delta);
    CHECK(psi(s, a, 1) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("policy library") {
  std::mt19937_64 rng(11);
  PolicyLibrary lib;
  lib.reward_model = RewardModel(2, 3, 2, 0.25);
  lib.reward_model.update(1, 2, 1, 0.3);
  lib.base_tasks = TaskMatrix(std::vector<TaskVector>{tv({1, 0}), tv({0, 1})});
  lib.metadata["grid.width"] = "3";
  lib.metadata["note"] = "two words";
  SfTable a = random_table(3, 2, 2, rng);
  a.set_policy_id("pi_1");
  lib.append(a);
  lib.append(random_table(3, 2, 2, rng));
  CHECK_THROWS_AS(lib.append(SfTable(3, 2, 3)), UsageError);
  CHECK(lib.size() == 2);

  std::stringstream ss;
  write_library(ss, lib);
  const PolicyLibrary back = read_library(ss);
  CHECK(back.size() == 2);
  CHECK(back.metadata == lib.metadata);
  CHECK(back.tables[0].policy_id() == "pi_1");
  for (std::size_t i = 0; i < 2; ++i) CHECK(back.tables[i].values() == lib.tables[i].values());
  CHECK(back.reward_model.table(1)(2, 1) == lib.reward_model.table(1)(2, 1));
  CHECK(back.reward_model.alpha() == 0.25);
  CHECK(back.base_tasks.matrix() == lib.base_tasks.matrix());

  for (const std::string bad : {"", "sfgpi-library 2\n", "not-a-library 1\n"}) {
    std::istringstream in(bad);
    CHECK_THROWS_AS(read_library(in), FormatError);
  }
  std::string text = ss.str();
  text.resize(text.size() / 2);
  std::istringstream truncated(text);
  CHECK_THROWS_AS(read_library(truncated), FormatError);
}
