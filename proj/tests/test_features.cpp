#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "sfgpi/errors.hpp"
#include "sfgpi/features.hpp"
#include "sfgpi/gridworld.hpp"

using namespace sfgpi;

namespace {

TaskVector tv(std::initializer_list<double> v) { return TaskVector(std::vector<double>(v)); }

GridConfig room(int types) {
  GridConfig g;
  g.width = 3;
  g.height = 3;
  g.num_object_types = types;
  g.instances_per_type = 1;
  return g;
}

}  // namespace

TEST_CASE("compact task notation") {
  CHECK(parse_task("1-100") == tv({1, -1, 0, 0}));
  CHECK(parse_task("-11-10") == tv({-1, 1, -1, 0}));
  CHECK(parse_task("0000") == tv({0, 0, 0, 0}));
  CHECK(parse_task("(1,-0.1,-0.1,-0.1)") == tv({1, -0.1, -0.1, -0.1}));
  CHECK(parse_task("( 0.5 , 2 )") == tv({0.5, 2}));
  for (const char* bad : {"", "1x", "(1,", "--1", "()", "1-", "(1,,2)"}) {
    CHECK_THROWS_AS(parse_task(bad), FormatError);
  }
  for (const char* s : {"1100", "-1-100", "(1,-0.1,-0.1,-0.1)", "(0.25,3)"}) {
    CHECK(parse_task(format_task(parse_task(s))) == parse_task(s));
  }
  CHECK(format_task(tv({-1, 1, 0, -1})) == "-110-1");
}

TEST_CASE("task vector dot product") {
  const TaskVector w = tv({1, -1, 0.5});
  const std::vector<double> phi{2, 1, 4};
  CHECK(w.dot(phi) == 3.0);
  CHECK_THROWS_AS(w.dot(std::vector<double>{1, 2}), UsageError);
  CHECK_THROWS_AS(tv({1, std::nan("")}), DataError);
}

TEST_CASE("task matrix rank") {
  CHECK(TaskMatrix(std::vector<TaskVector>{parse_task("1000"), parse_task("0100"), parse_task("0010"), parse_task("0001")}).rank() == 4);
  const TaskMatrix prime({parse_task("1000"), parse_task("0100"), parse_task("0011"), parse_task("1100")});
  CHECK(prime.rank() == 3);
  CHECK(prime.num_tasks() == 4);
  CHECK(TaskMatrix(std::vector<TaskVector>{parse_task("1000"), parse_task("0100")}).rank() == 2);
  CHECK_THROWS_AS(TaskMatrix(std::vector<TaskVector>{}), UsageError);
}

TEST_CASE("pseudo-inverse task transform") {
  SUBCASE("identity") {
    const TaskMatrix I({parse_task("1000"), parse_task("0100"), parse_task("0010"), parse_task("0001")});
    const TaskVector w = tv({0.3, -1, 2, 0});
    const TaskVector w2 = task_transform(I, w);
    for (std::size_t j = 0; j < 4; ++j) CHECK(w2[j] == doctest::Approx(w[j]).epsilon(1e-12));
  }
  SUBCASE("scaling") {
    const TaskMatrix W2({parse_task("2000"), parse_task("0200"), parse_task("0020"), parse_task("0002")});
    const TaskVector w2 = task_transform(W2, parse_task("1000"));
    CHECK(w2[0] == doctest::Approx(0.5));
    CHECK(std::abs(w2[1]) < 1e-12);
  }
  SUBCASE("random tall matrix keeps every dot product") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd W(6, 4);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 4; ++j) W(i, j) = n(rng);
    const TaskMatrix M(W);
    const TaskVector w = tv({n(rng), n(rng), n(rng), n(rng)});
    const TaskVector wp = task_transform(M, w);
    for (int k = 0; k < 100; ++k) {
      Eigen::Vector4d phi(n(rng), n(rng), n(rng), n(rng));
      const Eigen::VectorXd r = W * phi;
      std::vector<double> rv(r.data(), r.data() + 6), pv(phi.data(), phi.data() + 4);
      CHECK(std::abs(wp.dot(rv) - w.dot(pv)) < 1e-9);
    }
  }
  SUBCASE("rank deficient") {
    const TaskMatrix prime({parse_task("1000"), parse_task("0100"), parse_task("0011"), parse_task("1100")});
    CHECK_THROWS_AS(task_transform(prime, parse_task("0010")), RankError);
  }
}

TEST_CASE("reward model updates") {
  RewardModel m(2, 3, 2, 0.1);
  CHECK(m.phi_of(1, 1) == std::vector<double>{0.0, 0.0});
  reward_update(m, 0, 1, 1, 1.0);
  CHECK(m.table(0)(1, 1) == doctest::Approx(0.1));
  CHECK(m.table(1)(1, 1) == 0.0);
  CHECK(m.table(0)(0, 0) == 0.0);
  for (int n = 1; n < 30; ++n) reward_update(m, 0, 1, 1, 1.0);
  CHECK(1.0 - m.table(0)(1, 1) == doctest::Approx(std::pow(0.9, 30)).epsilon(1e-12));
  CHECK_THROWS_AS(reward_update(m, 0, 0, 0, std::nan("")), DataError);
  CHECK_THROWS_AS(reward_update(m, 5, 0, 0, 1.0), UsageError);
  CHECK_THROWS_AS(RewardModel(1, 1, 1, 0.0), ConfigError);
  CHECK_THROWS_AS(RewardModel(1, 1, 1, 1.5), ConfigError);

  RewardModel b(1, 1, 1, 0.01);
  std::mt19937_64 rng(8);
  std::bernoulli_distribution coin(0.3);
  for (int i = 0; i < 100000; ++i) reward_update(b, 0, 0, 0, coin(rng) ? 1.0 : 0.0);
  CHECK(std::abs(b.table(0)(0, 0) - 0.3) < 0.05);
}

TEST_CASE("learned reward features converge to the enumerated marginals") {
  const GridConfig g = room(2);
  const StateSpace sp(g);
  const std::vector<TaskVector> tasks{TaskVector::unit(2, 0), TaskVector::unit(2, 1)};
  const TabularMdp mdp = enumerate_mdp(sp, tasks, 0.9);
  // With step size 1 a single visit is already exact: pickup rewards do not
  // depend on where the object respawns.
  RewardModel model(2, sp.size(), kNumMoves, 1.0);
  std::vector<std::vector<int>> visits(2, std::vector<int>(sp.size() * kNumMoves, 0));
  std::mt19937_64 rng(1);
  for (std::size_t t = 0; t < 2; ++t) {
    GridWorld env(g, tasks[t]);
    for (int e = 0; e < 1500; ++e) {
      env.reset(rng());
      while (!env.done()) {
        const StateId s = sp.index_of(env.state());
        const auto a = static_cast<ActionId>(rng() % 4);
        const double r = env.step(a).reward;
        model.update(t, s, a, r);
        ++visits[t][static_cast<std::size_t>(s) * kNumMoves + static_cast<std::size_t>(a)];
      }
    }
  }
  for (std::size_t k = 0; k < 2; ++k) {
    const RewardTable r = mdp.expected_reward(k);
    for (std::size_t s = 0; s < sp.size(); ++s)
      for (std::size_t a = 0; a < kNumMoves; ++a)
        if (visits[k][s * kNumMoves + a] > 0) CHECK(model.table(k)(s, a) == doctest::Approx(r(s, a)).epsilon(1e-12));
  }
}

TEST_CASE("task projection") {
  const GridConfig g = room(4);
  const std::vector<TaskVector> tasks{parse_task("1000"), parse_task("0100"), parse_task("0010"),
                                      parse_task("0001"), parse_task("0011"), parse_task("1100")};
  const TabularMdp mdp = enumerate_mdp(g, tasks, 0.9);
  std::vector<RewardTable> r;
  for (std::size_t k = 0; k < tasks.size(); ++k) r.push_back(mdp.expected_reward(k));
  const std::vector<RewardTable> canon{r[0], r[1], r[2], r[3]};
  const std::vector<RewardTable> prime{r[0], r[1], r[4], r[5]};

  SUBCASE("inside the span") {
    const Projection p = project_task(r[5], canon);
    CHECK(p.w[0] == doctest::Approx(1.0));
    CHECK(p.w[1] == doctest::Approx(1.0));
    CHECK(std::abs(p.w[2]) < 1e-9);
    CHECK(p.residual_inf < 1e-9);
    CHECK_FALSE(p.degenerate);
  }
  SUBCASE("outside a dependent basis") {
    const Projection p = project_task(r[2], prime);
    CHECK(p.degenerate);
    // Normal-equation oracle on the independent subset {1000, 0100, 0011}.
    const Eigen::Index n = static_cast<Eigen::Index>(r[0].size());
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      X(i, 0) = r[0].values()[static_cast<std::size_t>(i)];
      X(i, 1) = r[1].values()[static_cast<std::size_t>(i)];
      X(i, 2) = r[4].values()[static_cast<std::size_t>(i)];
      y(i) = r[2].values()[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd beta = (X.transpose() * X).ldlt().solve(X.transpose() * y);
    const double resid = (X * beta - y).cwiseAbs().maxCoeff();
    CHECK(resid > 0.1);
    CHECK(p.residual_inf == doctest::Approx(resid).epsilon(1e-8));
    const RewardTable fit = combine(prime, p.w);
    double worst = 0.0;
    for (std::size_t i = 0; i < fit.size(); ++i)
      worst = std::max(worst, std::abs(fit.values()[i] - r[2].values()[i]));
    CHECK(worst == doctest::Approx(p.residual_inf).epsilon(1e-9));
  }
  SUBCASE("shape mismatch") {
    const std::vector<RewardTable> other{RewardTable(2, 2)};
    CHECK_THROWS_AS(project_task(r[0], other), UsageError);
  }
}

TEST_CASE("multitask factorization") {
  SUBCASE("exact rank one") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> us(12), vs(3);
    for (auto& x : us) x = u(rng);
    for (auto& x : vs) x = u(rng);
    std::vector<RewardSample> samples;
    for (std::size_t s = 0; s < 6; ++s)
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t t = 0; t < 3; ++t)
          samples.push_back({static_cast<StateId>(s), static_cast<ActionId>(a), t, us[s * 2 + a] * vs[t]});
    const MultitaskFit fit = fit_multitask_features(samples, 6, 2, 1, 3);
    CHECK(fit.error <= 1e-6);
    for (std::size_t k = 1; k < fit.error_history.size(); ++k)
      CHECK(fit.error_history[k] <= fit.error_history[k - 1] + 1e-12);
  }
  SUBCASE("zero rewards") {
    std::vector<RewardSample> samples{{0, 0, 0, 0.0}, {1, 0, 1, 0.0}};
    const MultitaskFit fit = fit_multitask_features(samples, 2, 1, 1, 2);
    CHECK(fit.error == 0.0);
  }
  SUBCASE("uncovered task") {
    std::vector<RewardSample> samples{{0, 0, 0, 1.0}};
    CHECK_THROWS_AS(fit_multitask_features(samples, 1, 1, 1, 2), DataError);
  }
  SUBCASE("d = D does at least as well as rewards as features") {
    const GridConfig g = room(2);
    const StateSpace sp(g);
    std::vector<RewardSample> samples;
    RewardModel model(2, sp.size(), kNumMoves, 0.5);
    std::mt19937_64 rng(3);
    for (std::size_t t = 0; t < 2; ++t) {
      GridWorld env(g, TaskVector::unit(2, t));
      for (int e = 0; e < 40; ++e) {
        env.reset(rng());
        while (!env.done()) {
          const StateId s = sp.index_of(env.state());
          const auto a = static_cast<ActionId>(rng() % 4);
          const double r = env.step(a).reward;
          samples.push_back({s, a, t, r});
          model.update(t, s, a, r);
        }
      }
    }
    const MultitaskFit fit = fit_multitask_features(samples, sp.size(), kNumMoves, 2, 2);
    CHECK(fit.error <= reward_model_error(model, samples) + 1e-9);
  }
}
