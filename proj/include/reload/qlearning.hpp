#pragma once

#include "reload/domain.hpp"
#include "reload/environment.hpp"
#include "reload/rng.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace reload {

/// Action values Q(s, a) for the six SUT states and one action per transaction.
struct QTable {
  Eigen::MatrixXd values;                                           // 6 x T
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> visits;  // 6 x T

  QTable() = default;
  explicit QTable(std::size_t actions)
      : values(Eigen::MatrixXd::Zero(SutState::kCount, static_cast<Eigen::Index>(actions))),
        visits(decltype(visits)::Zero(SutState::kCount, static_cast<Eigen::Index>(actions))) {}

  std::size_t actions() const noexcept { return static_cast<std::size_t>(values.cols()); }
  double operator()(SutState s, ActionId a) const {
    return values(static_cast<Eigen::Index>(s.index()), static_cast<Eigen::Index>(a.k));
  }

  friend bool operator==(const QTable& a, const QTable& b) {
    return a.values.rows() == b.values.rows() && a.values.cols() == b.values.cols() &&
           a.values == b.values && a.visits == b.visits;
  }
};

struct EpsilonSchedule {
  enum class Kind { Fixed, Decaying };
  Kind kind = Kind::Fixed;
  double value = 0.2;     // Fixed
  double initial = 0.9;   // Decaying: max(floor, initial * decay^episode)
  double decay = 0.9;
  double floor = 0.05;

  static EpsilonSchedule fixed(double eps) { return {Kind::Fixed, eps}; }
  static EpsilonSchedule decaying(double initial = 0.9, double decay = 0.9, double floor = 0.05) {
    return {Kind::Decaying, 0.0, initial, decay, floor};
  }
  double at(std::size_t episode) const;
  bool valid() const noexcept;
  friend bool operator==(const EpsilonSchedule&, const EpsilonSchedule&) = default;
};

struct AlphaSchedule {
  enum class Kind { Fixed, Decaying };
  Kind kind = Kind::Fixed;
  double value = 0.5;

  static AlphaSchedule fixed(double alpha) { return {Kind::Fixed, alpha}; }
  static AlphaSchedule decaying() { return {Kind::Decaying, 0.0}; }
  // Decaying: 1 / (1 + visits(s, a)).
  double at(const QTable& q, SutState s, ActionId a) const;
  bool valid() const noexcept;
  friend bool operator==(const AlphaSchedule&, const AlphaSchedule&) = default;
};

struct LearningParams {
  AlphaSchedule alpha = AlphaSchedule::fixed(0.5);
  double gamma = 0.5;
  EpsilonSchedule epsilon = EpsilonSchedule::decaying();

  bool valid() const noexcept;
  friend bool operator==(const LearningParams&, const LearningParams&) = default;
};

/// How state boundaries are chosen for an objective. Unset boundaries follow the objective.
struct ThresholdConfig {
  double rt_low = 500.0;
  std::optional<double> rt_high;
  std::optional<double> er_boundary;

  StateThresholds resolve(const TestObjective& obj) const;
  friend bool operator==(const ThresholdConfig&, const ThresholdConfig&) = default;
};

/// Episode settings shared by the agents and the baseline strategies.
struct EpisodeOptions {
  std::int64_t initial_per_transaction = 1;
  std::size_t max_steps = 60;
  std::uint64_t seed = 0;
  ThresholdConfig thresholds;
};

struct EpisodeStep {
  SutState state;
  ActionId action;
  double reward = 0.0;
  SutState next_state;
  std::int64_t workload_total = 0;
  PerfMeasurement measurement;
};

struct EpisodeTrace {
  std::vector<EpisodeStep> steps;
  bool terminal = false;
  std::int64_t final_users = 0;
  TestObjective objective;
  std::vector<double> losses;  // DQN only

  bool budget_exhausted() const noexcept { return !terminal; }
};

ActionId greedy_action(const QTable& q, SutState s, CounterRng& rng);

/// epsilon-greedy over Q(s, .); ties among maximizers are broken uniformly.
ActionId select_action(const QTable& q, SutState s, double eps, CounterRng& rng);

/// Q(s,a) <- (1 - alpha) Q(s,a) + alpha [r + gamma max_a' Q(s', a')]
void q_update(QTable& q, SutState s, ActionId a, double r, SutState s_next, double alpha, double gamma);

// Per-episode agent stream, independent of the environment's noise stream.
CounterRng agent_rng(std::uint64_t seed, std::uint64_t episode, std::uint64_t salt = 0);

EpisodeTrace run_episode(Environment& env, QTable& q, const LearningParams& params,
                         const TestObjective& objective, const EpisodeOptions& options,
                         std::uint64_t episode, double epsilon);

struct PolicySnapshot;

struct InitialLearningResult;

InitialLearningResult run_initial_learning(Environment& env, const LearningParams& params,
                                           const TestObjective& objective, std::size_t episodes,
                                           const EpisodeOptions& options);

/// Resumes from snapshot (updated in place) and runs one episode per objective.
/// Episode numbering continues from snapshot.episodes.
std::vector<EpisodeTrace> run_transfer_learning(Environment& env, PolicySnapshot& snapshot,
                                                const LearningParams& params,
                                                const std::vector<TestObjective>& schedule,
                                                const EpisodeOptions& options);

/// First index e whose window [e - window + 1, e] has (max - min) / mean <= tol.
std::optional<std::size_t> detect_convergence(const std::vector<double>& final_users,
                                              std::size_t window = 5, double tol = 0.15);
std::optional<std::size_t> detect_convergence(const std::vector<EpisodeTrace>& traces,
                                              std::size_t window = 5, double tol = 0.15);

std::vector<double> final_users(const std::vector<EpisodeTrace>& traces);

}  // namespace reload
