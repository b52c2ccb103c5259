#include "reload/qlearning.hpp"

#include "reload/error.hpp"
#include "reload/snapshot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace reload {

namespace {
constexpr std::uint64_t kAgentStream = 0xA6E47;
}

double EpsilonSchedule::at(std::size_t episode) const {
  if (kind == Kind::Fixed) return value;
  return std::max(floor, initial * std::pow(decay, static_cast<double>(episode)));
}

bool EpsilonSchedule::valid() const noexcept {
  if (kind == Kind::Fixed) return value >= 0.0 && value <= 1.0;
  return initial >= 0.0 && initial <= 1.0 && decay > 0.0 && decay <= 1.0 && floor >= 0.0 &&
         floor <= initial;
}

double AlphaSchedule::at(const QTable& q, SutState s, ActionId a) const {
  if (kind == Kind::Fixed) return value;
  const auto n = q.visits(static_cast<Eigen::Index>(s.index()), static_cast<Eigen::Index>(a.k));
  return 1.0 / (1.0 + static_cast<double>(n));
}

bool AlphaSchedule::valid() const noexcept {
  return kind == Kind::Decaying || (value > 0.0 && value <= 1.0);
}

bool LearningParams::valid() const noexcept {
  return alpha.valid() && gamma >= 0.0 && gamma < 1.0 && epsilon.valid();
}

StateThresholds ThresholdConfig::resolve(const TestObjective& obj) const {
  StateThresholds th{rt_low, rt_high.value_or(obj.rt_threshold), er_boundary.value_or(obj.er_threshold)};
  if (!th.valid()) throw Error(ErrorCode::ConfigInvalid, "state thresholds are inconsistent");
  return th;
}

ActionId greedy_action(const QTable& q, SutState s, CounterRng& rng) {
  const auto row = q.values.row(static_cast<Eigen::Index>(s.index()));
  const double best = row.maxCoeff();
  std::size_t ties = 0;
  for (Eigen::Index a = 0; a < row.size(); ++a) ties += row(a) == best;
  std::size_t pick = ties == 1 ? 0 : rng.below(ties);
  for (Eigen::Index a = 0; a < row.size(); ++a) {
    if (row(a) != best) continue;
    if (pick-- == 0) return {static_cast<std::size_t>(a)};
  }
  return {0};
}

ActionId select_action(const QTable& q, SutState s, double eps, CounterRng& rng) {
  if (rng.uniform() < eps) return {rng.below(q.actions())};
  return greedy_action(q, s, rng);
}

void q_update(QTable& q, SutState s, ActionId a, double r, SutState s_next, double alpha, double gamma) {
  const auto row = static_cast<Eigen::Index>(s.index());
  const auto col = static_cast<Eigen::Index>(a.k);
  const double future = q.values.row(static_cast<Eigen::Index>(s_next.index())).maxCoeff();
  q.values(row, col) = (1.0 - alpha) * q.values(row, col) + alpha * (r + gamma * future);
  ++q.visits(row, col);
}

CounterRng agent_rng(std::uint64_t seed, std::uint64_t episode, std::uint64_t salt) {
  return CounterRng(hash_key(hash_key(seed, kAgentStream), salt), episode);
}

EpisodeTrace run_episode(Environment& env, QTable& q, const LearningParams& params,
                         const TestObjective& objective, const EpisodeOptions& options,
                         std::uint64_t episode, double epsilon) {
  if (options.max_steps < 1) throw Error(ErrorCode::InvalidArgument, "max_steps must be at least 1");
  if (options.initial_per_transaction < 1)
    throw Error(ErrorCode::InvalidArgument, "initial workload must have at least one user");
  if (q.actions() != env.catalog().size())
    throw Error(ErrorCode::CatalogMismatch, "Q-table actions do not match the environment catalog");

  const StateThresholds th = options.thresholds.resolve(objective);
  CounterRng rng = agent_rng(options.seed, episode);

  EpisodeTrace trace;
  trace.objective = objective;
  Workload w = uniform_workload(env.catalog().size(), options.initial_per_transaction);
  std::uint64_t step = 0;
  SutState state = classify_state(execute_step(env, w, episode, step, "agent-qlearning"), th);

  while (trace.steps.size() < options.max_steps) {
    const ActionId a = select_action(q, state, epsilon, rng);
    w = apply_action(w, a);
    const PerfMeasurement m = execute_step(env, w, episode, ++step, "agent-qlearning");
    const SutState next = classify_state(m, th);
    const double r = reward(m, objective);
    q_update(q, state, a, r, next, params.alpha.at(q, state, a), params.gamma);

    trace.steps.push_back({state, a, r, next, total(w), m});
    state = next;
    if (objective_met(m, objective)) {
      trace.terminal = true;
      break;
    }
  }
  trace.final_users = total(w);
  return trace;
}

InitialLearningResult run_initial_learning(Environment& env, const LearningParams& params,
                                           const TestObjective& objective, std::size_t episodes,
                                           const EpisodeOptions& options) {
  if (episodes < 1) throw Error(ErrorCode::InvalidArgument, "episode budget must be at least 1");
  if (!params.valid()) throw Error(ErrorCode::ConfigInvalid, "learning parameters out of range");

  InitialLearningResult result;
  QTable q(env.catalog().size());
  result.traces.reserve(episodes);
  for (std::size_t e = 0; e < episodes; ++e)
    result.traces.push_back(run_episode(env, q, params, objective, options, e, params.epsilon.at(e)));

  result.snapshot.policy = std::move(q);
  result.snapshot.catalog = env.catalog();
  result.snapshot.thresholds = options.thresholds.resolve(objective);
  result.snapshot.objective = objective;
  result.snapshot.episodes = episodes;
  result.convergence = detect_convergence(result.traces);
  return result;
}

std::vector<EpisodeTrace> run_transfer_learning(Environment& env, PolicySnapshot& snapshot,
                                                const LearningParams& params,
                                                const std::vector<TestObjective>& schedule,
                                                const EpisodeOptions& options) {
  if (!(snapshot.catalog == env.catalog()))
    throw Error(ErrorCode::CatalogMismatch, "snapshot catalog does not match the environment");
  if (!snapshot.is_tabular())
    throw Error(ErrorCode::InvalidArgument, "tabular transfer needs a Q-table snapshot");

  std::vector<EpisodeTrace> traces;
  traces.reserve(schedule.size());
  for (const TestObjective& obj : schedule) {
    const std::size_t e = snapshot.episodes;
    traces.push_back(run_episode(env, snapshot.q_table(), params, obj, options, e, params.epsilon.at(e)));
    snapshot.objective = obj;
    snapshot.thresholds = options.thresholds.resolve(obj);
    ++snapshot.episodes;
  }
  return traces;
}

std::optional<std::size_t> detect_convergence(const std::vector<double>& series, std::size_t window,
                                              double tol) {
  if (window < 2) throw Error(ErrorCode::InvalidArgument, "convergence window must be at least 2");
  for (std::size_t e = window - 1; e < series.size(); ++e) {
    const auto first = series.begin() + static_cast<std::ptrdiff_t>(e + 1 - window);
    const auto last = series.begin() + static_cast<std::ptrdiff_t>(e + 1);
    const auto [lo, hi] = std::minmax_element(first, last);
    double sum = 0.0;
    for (auto it = first; it != last; ++it) sum += *it;
    const double mean = sum / static_cast<double>(window);
    if (mean > 0.0 && (*hi - *lo) / mean <= tol) return e;
  }
  return std::nullopt;
}

std::vector<double> final_users(const std::vector<EpisodeTrace>& traces) {
  std::vector<double> out;
  out.reserve(traces.size());
  for (const auto& t : traces) out.push_back(static_cast<double>(t.final_users));
  return out;
}

std::optional<std::size_t> detect_convergence(const std::vector<EpisodeTrace>& traces,
                                              std::size_t window, double tol) {
  return detect_convergence(final_users(traces), window, tol);
}

}  // namespace reload
