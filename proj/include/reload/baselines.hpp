#pragma once

#include "reload/domain.hpp"
#include "reload/environment.hpp"
#include "reload/qlearning.hpp"

#include <cstdint>
#include <vector>

namespace reload {

struct StrategyStep {
  Workload workload;
  PerfMeasurement measurement;
};

struct StrategyRun {
  std::vector<StrategyStep> steps;
  std::int64_t final_users = 0;
  bool terminal = false;
  TestObjective objective;
};

/// Every entry multiplied by 4/3, rounded up.
Workload scale_uniformly(const Workload& w);

/// Equal users on every transaction, grown by one third per step until the objective is met.
StrategyRun run_standard_baseline(Environment& env, const TestObjective& objective,
                                  const EpisodeOptions& options, std::uint64_t episode = 0);

/// One uniformly chosen transaction grown by one third per step.
StrategyRun run_random_testing(Environment& env, const TestObjective& objective,
                               const EpisodeOptions& options, std::uint64_t episode = 0);

}  // namespace reload
