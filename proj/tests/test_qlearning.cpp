#include "reload/environment.hpp"
#include "reload/error.hpp"
#include "reload/qlearning.hpp"
#include "reload/sim.hpp"
#include "reload/snapshot.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace reload;

namespace {

// Scalar restatement of the update rule, kept deliberately naive.
double reference_update(double q, double r, double next_max, double alpha, double gamma) {
  return (1.0 - alpha) * q + alpha * (r + gamma * next_max);
}

// Chi-square statistic of observed counts against expected probabilities.
double chi_square(const std::vector<int>& counts, const std::vector<double>& probs, int n) {
  double stat = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double expect = probs[i] * n;
    stat += (counts[i] - expect) * (counts[i] - expect) / expect;
  }
  return stat;
}

constexpr double kChiSquare10Dof01 = 23.209;  // 0.99 quantile, 10 degrees of freedom

const SutState kS0 = SutState::from_index(0);
const SutState kS3 = SutState::from_index(3);

}  // namespace

TEST(QUpdate, Examples) {
  QTable q(11);
  q_update(q, kS0, {2}, 2.0, kS3, 0.5, 0.5);
  EXPECT_DOUBLE_EQ(q(kS0, {2}), 1.0);
  EXPECT_EQ(q.visits(0, 2), 1);
  EXPECT_EQ((q.values.array() != 0).count(), 1);

  QTable z(11);
  q_update(z, kS0, {4}, 0.0, kS3, 0.3, 0.7);
  EXPECT_EQ(z.values, QTable(11).values);

  QTable p(11);
  p.values(0, 1) = 1.0;
  p.values(3, 5) = 2.0;
  q_update(p, kS0, {1}, 1.0, kS3, 0.5, 0.5);
  EXPECT_DOUBLE_EQ(p(kS0, {1}), 1.5);
}

TEST(QUpdate, DegenerateAlphaOneGammaZero) {
  QTable q(4);
  q.values.setConstant(3.0);
  q_update(q, kS0, {1}, 0.25, kS3, 1.0, 0.0);
  EXPECT_EQ(q(kS0, {1}), 0.25);
}

TEST(QUpdate, MatchesScalarReference) {
  CounterRng rng(21);
  for (int i = 0; i < 10000; ++i) {
    QTable q(5);
    q.values = Eigen::MatrixXd::NullaryExpr(6, 5, [&] { return 10.0 * rng.uniform() - 5.0; });
    const auto s = SutState::from_index(rng.below(6));
    const auto sn = SutState::from_index(rng.below(6));
    const ActionId a{rng.below(5)};
    const double r = 4.0 * rng.uniform(), alpha = 1e-3 + (1 - 1e-3) * rng.uniform(), gamma = 0.999 * rng.uniform();
    const double expect = reference_update(q(s, a), r, q.values.row(sn.index()).maxCoeff(), alpha, gamma);
    const QTable before = q;
    q_update(q, s, a, r, sn, alpha, gamma);
    EXPECT_NEAR(q(s, a), expect, 1e-12);
    EXPECT_LE(((q.values - before.values).array() != 0).count(), 1);
  }
}

TEST(QUpdate, RewardScalingPreservesArgmax) {
  CounterRng rng(22);
  QTable a(6), b(6);
  const double c = 3.7;
  for (int i = 0; i < 500; ++i) {
    const auto s = SutState::from_index(rng.below(6));
    const auto sn = SutState::from_index(rng.below(6));
    const ActionId act{rng.below(6)};
    const double r = rng.uniform();
    q_update(a, s, act, r, sn, 0.5, 0.5);
    q_update(b, s, act, c * r, sn, 0.5, 0.5);
  }
  EXPECT_LT((b.values - c * a.values).cwiseAbs().maxCoeff(), 1e-9);
  for (Eigen::Index s = 0; s < 6; ++s) {
    Eigen::Index ia, ib;
    a.values.row(s).maxCoeff(&ia);
    b.values.row(s).maxCoeff(&ib);
    EXPECT_EQ(ia, ib);
  }
}

TEST(SelectAction, PureExploitation) {
  QTable q(11);
  q.values(0, 7) = 1.0;
  CounterRng rng(23);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(select_action(q, kS0, 0.0, rng).k, 7u);
}

TEST(SelectAction, TiesAreBrokenUniformly) {
  QTable q(4);
  q.values(0, 1) = q.values(0, 3) = 2.0;
  CounterRng rng(24);
  int ones = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto k = select_action(q, kS0, 0.0, rng).k;
    ASSERT_TRUE(k == 1 || k == 3);
    ones += k == 1;
  }
  EXPECT_NEAR(ones / 10000.0, 0.5, 0.02);
}

TEST(SelectAction, MatchesEpsilonMixture) {
  constexpr int kDraws = 10000;
  for (double eps : {0.2, 0.5, 1.0}) {
    QTable q(11);
    q.values(0, 4) = 1.0;
    CounterRng rng(25);
    std::vector<int> counts(11, 0);
    for (int i = 0; i < kDraws; ++i) ++counts[select_action(q, kS0, eps, rng).k];
    std::vector<double> probs(11, eps / 11.0);
    probs[4] += 1.0 - eps;
    EXPECT_LT(chi_square(counts, probs, kDraws), kChiSquare10Dof01) << "eps " << eps;
    EXPECT_NEAR(counts[4] / double(kDraws), probs[4], 0.02);
  }
}

TEST(EpsilonSchedule, DecayingIsNonIncreasingAndFloored) {
  const auto e = EpsilonSchedule::decaying();
  EXPECT_DOUBLE_EQ(e.at(0), 0.9);
  EXPECT_DOUBLE_EQ(e.at(1), 0.81);
  for (std::size_t i = 1; i < 200; ++i) {
    EXPECT_LE(e.at(i), e.at(i - 1));
    EXPECT_GE(e.at(i), 0.05);
  }
  EXPECT_DOUBLE_EQ(e.at(100), 0.05);
  EXPECT_DOUBLE_EQ(EpsilonSchedule::fixed(0.2).at(17), 0.2);
}

TEST(AlphaSchedule, DecayingUsesVisits) {
  QTable q(3);
  const auto a = AlphaSchedule::decaying();
  EXPECT_DOUBLE_EQ(a.at(q, kS0, {1}), 1.0);
  q_update(q, kS0, {1}, 1.0, kS0, 1.0, 0.0);
  q_update(q, kS0, {1}, 1.0, kS0, 1.0, 0.0);
  EXPECT_DOUBLE_EQ(a.at(q, kS0, {1}), 1.0 / 3.0);
}

TEST(RunEpisode, InitialOverloadEndsAfterOneStep) {
  SimConfig cfg = calibrate_default();
  cfg.capacity = 0.5;
  SimEnvironment env(cfg);
  QTable q(11);
  const auto t = run_episode(env, q, {}, {}, {}, 0, 0.9);
  EXPECT_TRUE(t.terminal);
  EXPECT_EQ(t.steps.size(), 1u);
}

TEST(RunEpisode, BudgetOfOneStep) {
  SimEnvironment env;
  QTable q(11);
  EpisodeOptions o;
  o.max_steps = 1;
  const auto t = run_episode(env, q, {}, {}, o, 0, 0.9);
  EXPECT_FALSE(t.terminal);
  EXPECT_TRUE(t.budget_exhausted());
  EXPECT_EQ(t.steps.size(), 1u);
}

TEST(RunEpisode, TotalsStrictlyIncrease) {
  SimEnvironment env;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    QTable q(11);
    EpisodeOptions o;
    o.seed = seed;
    for (std::uint64_t e = 0; e < 5; ++e) {
      const auto t = run_episode(env, q, {}, {}, o, e, 0.5);
      std::int64_t prev = 11;
      for (const auto& s : t.steps) {
        EXPECT_GT(s.workload_total, prev);
        prev = s.workload_total;
      }
      EXPECT_EQ(t.final_users, prev);
      EXPECT_EQ(t.terminal, objective_met(t.steps.back().measurement, {}));
    }
  }
}

TEST(RunEpisode, CatalogMismatch) {
  SimEnvironment env;
  QTable q(5);
  try {
    run_episode(env, q, {}, {}, {}, 0, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CatalogMismatch);
  }
}

TEST(InitialLearning, ConvergesAndIsDeterministic) {
  SimEnvironment env;
  EpisodeOptions o;
  o.seed = 3;
  const auto a = run_initial_learning(env, {}, {}, 40, o);
  const auto b = run_initial_learning(env, {}, {}, 40, o);
  EXPECT_EQ(a.snapshot, b.snapshot);
  EXPECT_EQ(a.traces.size(), 40u);
  ASSERT_TRUE(a.convergence.has_value());
  EXPECT_LT(*a.convergence, 40u);
  EXPECT_EQ(a.snapshot.episodes, 40u);
  EXPECT_TRUE(a.snapshot.q_table().values.allFinite());

  EXPECT_EQ(run_initial_learning(env, {}, {}, 1, o).snapshot.episodes, 1u);
}

TEST(TransferLearning, RunsOneEpisodePerObjective) {
  SimEnvironment env;
  auto init = run_initial_learning(env, {}, {}, 40, {});
  std::vector<TestObjective> schedule;
  for (int k = 1; k <= 10; ++k) schedule.push_back({1500.0 + 100 * k, 0.20 + 0.01 * k});
  LearningParams p;
  p.epsilon = EpsilonSchedule::fixed(0.05);
  PolicySnapshot snap = init.snapshot;
  const auto traces = run_transfer_learning(env, snap, p, schedule, {});
  ASSERT_EQ(traces.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(traces[i].objective, schedule[i]);
  EXPECT_EQ(snap.episodes, 50u);
  EXPECT_EQ(snap.objective, schedule.back());
  EXPECT_FALSE(snap.q_table() == init.snapshot.q_table());

  PolicySnapshot untouched = init.snapshot;
  EXPECT_TRUE(run_transfer_learning(env, untouched, p, {}, {}).empty());
  EXPECT_EQ(untouched, init.snapshot);
}

TEST(TransferLearning, CatalogMismatch) {
  SimEnvironment env;
  auto snap = run_initial_learning(env, {}, {}, 2, {}).snapshot;
  SimConfig small;
  small.base_demand = Eigen::Vector3d(50, 100, 200);
  small.capacity = 5;
  SimEnvironment other(small);
  try {
    run_transfer_learning(other, snap, {}, {TestObjective{}}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CatalogMismatch);
  }
}

namespace {

// Independent window scan: recomputes each window from scratch with explicit loops.
std::optional<std::size_t> scan(const std::vector<double>& xs, std::size_t window, double tol) {
  for (std::size_t end = window; end <= xs.size(); ++end) {
    double lo = xs[end - window], hi = lo, sum = 0;
    for (std::size_t i = end - window; i < end; ++i) {
      lo = std::min(lo, xs[i]);
      hi = std::max(hi, xs[i]);
      sum += xs[i];
    }
    if (sum > 0 && (hi - lo) <= tol * (sum / window)) return end - 1;
  }
  return std::nullopt;
}

}  // namespace

TEST(Convergence, Examples) {
  EXPECT_EQ(detect_convergence(std::vector<double>(12, 30.0), 5, 0.15), 4u);
  EXPECT_EQ(detect_convergence(std::vector<double>(12, 30.0), 2, 0.0), 1u);
  std::vector<double> doubling;
  for (int i = 0; i < 30; ++i) doubling.push_back(std::ldexp(1.0, i));
  EXPECT_FALSE(detect_convergence(doubling, 5, 0.1).has_value());
  EXPECT_FALSE(detect_convergence(std::vector<double>(3, 1.0), 5, 0.15).has_value());
  EXPECT_THROW(detect_convergence(std::vector<double>{}, 1, 0.1), Error);
}

TEST(Convergence, MatchesBruteForceScan) {
  SimEnvironment env;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    EpisodeOptions o;
    o.seed = seed;
    const auto xs = final_users(run_initial_learning(env, {}, {}, 40, o).traces);
    for (std::size_t w : {2, 5, 8})
      for (double tol : {0.0, 0.1, 0.15, 0.3}) EXPECT_EQ(detect_convergence(xs, w, tol), scan(xs, w, tol));
  }
  CounterRng rng(26);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> xs(30);
    for (auto& x : xs) x = 30 + rng.below(8);
    EXPECT_EQ(detect_convergence(xs, 5, 0.15), scan(xs, 5, 0.15));
  }
}
