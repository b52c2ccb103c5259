#include "reload/dqn.hpp"

#include <algorithm>

namespace reload {

namespace {
constexpr std::uint64_t kDqnInitSalt = 0xD0;
constexpr std::uint64_t kDqnActSalt = 0xD1;
constexpr std::uint64_t kDqnReplaySalt = 0xD2;
}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error(ErrorCode::InvalidArgument, "replay buffer capacity must be positive");
  items_.reserve(capacity);
}

void ReplayBuffer::push(const Transition& t) {
  if (items_.size() < capacity_) {
    items_.push_back(t);
  } else {
    items_[next_] = t;
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch, CounterRng& rng) const {
  if (batch == 0 || items_.size() < batch)
    throw Error(ErrorCode::InvalidArgument, "not enough transitions to sample a batch");
  std::vector<Transition> out;
  out.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) out.push_back(items_[rng.below(items_.size())]);
  return out;
}

std::vector<std::size_t> DqnParams::layer_sizes(std::size_t actions) const {
  std::vector<std::size_t> sizes{2};
  for (std::size_t i = 0; i < hidden_layers; ++i) sizes.push_back(hidden);
  sizes.push_back(actions);
  return sizes;
}

Eigen::Vector2d state_features(const PerfMeasurement& m, const TestObjective& obj, double cap) {
  return {std::min(cap, m.avg_response_time / obj.rt_threshold), std::min(cap, m.error_rate / obj.er_threshold)};
}

DqnAgent::DqnAgent(const DqnParams& params, std::size_t actions, std::uint64_t seed)
    : buffer(params.buffer_capacity) {
  CounterRng rng(seed, kDqnInitSalt);
  online = QNetworkd::random(params.layer_sizes(actions), rng);
  target = online;
}

EpisodeTrace run_episode_dqn(Environment& env, DqnAgent& agent, const DqnParams& params,
                             const TestObjective& objective, const EpisodeOptions& options,
                             std::uint64_t episode, double epsilon) {
  if (options.max_steps < 1) throw Error(ErrorCode::InvalidArgument, "max_steps must be at least 1");
  if (agent.online.outputs() != env.catalog().size())
    throw Error(ErrorCode::CatalogMismatch, "network outputs do not match the environment catalog");

  const StateThresholds th = options.thresholds.resolve(objective);
  CounterRng act_rng = agent_rng(options.seed, episode, kDqnActSalt);
  CounterRng replay_rng = agent_rng(options.seed, episode, kDqnReplaySalt);
  const std::size_t n_actions = env.catalog().size();

  EpisodeTrace trace;
  trace.objective = objective;
  Workload w = uniform_workload(n_actions, options.initial_per_transaction);
  std::uint64_t step = 0;
  PerfMeasurement m = execute_step(env, w, episode, step, "agent-dqn");
  SutState state = classify_state(m, th);
  Eigen::Vector2d features = state_features(m, objective, params.feature_cap);

  while (trace.steps.size() < options.max_steps) {
    ActionId a;
    if (act_rng.uniform() < epsilon) {
      a = {act_rng.below(n_actions)};
    } else {
      const Eigen::VectorXd q = forward(agent.online, Eigen::VectorXd(features));
      Eigen::Index best;
      q.maxCoeff(&best);
      a = {static_cast<std::size_t>(best)};
    }
    w = apply_action(w, a);
    m = execute_step(env, w, episode, ++step, "agent-dqn");
    const SutState next = classify_state(m, th);
    const Eigen::Vector2d next_features = state_features(m, objective, params.feature_cap);
    const double r = reward(m, objective);
    const bool done = objective_met(m, objective);

    agent.buffer.push({features, a.k, r, next_features, done});
    if (agent.buffer.size() >= params.batch_size) {
      const auto batch = agent.buffer.sample(params.batch_size, replay_rng);
      trace.losses.push_back(train_step(agent.online, agent.target, std::span<const Transition>(batch),
                                        params.learning_rate, params.gamma, params.max_grad_norm));
    }
    if (++agent.env_steps % params.sync_every == 0) sync_target(agent.online, agent.target);

    trace.steps.push_back({state, a, r, next, total(w), m});
    state = next;
    features = next_features;
    if (done) {
      trace.terminal = true;
      break;
    }
  }
  trace.final_users = total(w);
  return trace;
}

}  // namespace reload

#include "reload/snapshot.hpp"

namespace reload {

InitialLearningResult run_dqn_learning(Environment& env, const DqnParams& params,
                                       const TestObjective& objective, std::size_t episodes,
                                       const EpisodeOptions& options) {
  if (episodes < 1) throw Error(ErrorCode::InvalidArgument, "episode budget must be at least 1");
  DqnAgent agent(params, env.catalog().size(), options.seed);
  InitialLearningResult result;
  result.traces.reserve(episodes);
  for (std::size_t e = 0; e < episodes; ++e)
    result.traces.push_back(
        run_episode_dqn(env, agent, params, objective, options, e, params.epsilon.at(e)));
  result.snapshot.policy = agent.online;
  result.snapshot.catalog = env.catalog();
  result.snapshot.thresholds = options.thresholds.resolve(objective);
  result.snapshot.objective = objective;
  result.snapshot.episodes = episodes;
  result.convergence = detect_convergence(result.traces);
  return result;
}

}  // namespace reload
