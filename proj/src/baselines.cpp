#include "reload/baselines.hpp"

#include "reload/error.hpp"

namespace reload {

namespace {

constexpr std::uint64_t kRandomTestingSalt = 0xC0FFEE;

template <typename Grow>
StrategyRun run_strategy(Environment& env, const TestObjective& objective, const EpisodeOptions& options,
                         std::uint64_t episode, Grow&& grow) {
  if (options.initial_per_transaction < 1)
    throw Error(ErrorCode::InvalidArgument, "initial users per transaction must be at least 1");
  if (options.max_steps < 1) throw Error(ErrorCode::InvalidArgument, "max_steps must be at least 1");

  StrategyRun run;
  run.objective = objective;
  Workload w = uniform_workload(env.catalog().size(), options.initial_per_transaction);
  for (std::uint64_t step = 0; step < options.max_steps; ++step) {
    if (step > 0) w = grow(w);
    const PerfMeasurement m = execute_step(env, w, episode, step, "baselines");
    run.steps.push_back({w, m});
    if (objective_met(m, objective)) {
      run.terminal = true;
      break;
    }
  }
  run.final_users = total(w);
  return run;
}

}  // namespace

Workload scale_uniformly(const Workload& w) {
  return w.unaryExpr([](std::int64_t u) { return (4 * u + 2) / 3; });
}

StrategyRun run_standard_baseline(Environment& env, const TestObjective& objective,
                                  const EpisodeOptions& options, std::uint64_t episode) {
  return run_strategy(env, objective, options, episode, scale_uniformly);
}

StrategyRun run_random_testing(Environment& env, const TestObjective& objective,
                               const EpisodeOptions& options, std::uint64_t episode) {
  CounterRng rng = agent_rng(options.seed, episode, kRandomTestingSalt);
  const std::size_t n = env.catalog().size();
  return run_strategy(env, objective, options, episode,
                      [&](const Workload& w) { return apply_action(w, {rng.below(n)}); });
}

}  // namespace reload
