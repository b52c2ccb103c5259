#pragma once

#include "reload/domain.hpp"
#include "reload/dqn.hpp"
#include "reload/environment.hpp"
#include "reload/harness.hpp"
#include "reload/http_actuator.hpp"
#include "reload/qlearning.hpp"
#include "reload/sim.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace reload {

enum class ActuatorKind { Sim, Http };

struct HttpSettings {
  std::filesystem::path scripts;
  RunSpec run;
};

/// Everything one CLI invocation needs. Every field has a default, so an empty
/// config file is valid for the simulator.
struct RunConfig {
  ActuatorKind actuator = ActuatorKind::Sim;
  Technique technique = Technique::A3;
  std::size_t episodes = 40;
  std::size_t dqn_episodes = 45;
  TestObjective objective;
  std::vector<TestObjective> transfer_schedule = drift_schedule();
  LearningParams learning;
  double transfer_epsilon = 0.05;
  DqnParams dqn;
  ThresholdConfig thresholds;
  std::int64_t initial_per_transaction = 1;
  std::size_t max_steps = 60;
  std::vector<std::string> catalog = TransactionCatalog::default_catalog().names();
  SimConfig sim = calibrate_default();
  HttpSettings http;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::string preset = "efficiency";
  std::filesystem::path out = "reload-out";
  std::size_t convergence_window = 5;
  double convergence_tol = 0.15;
  std::size_t savings_window = 10;

  // Throws ConfigInvalid on inconsistent settings.
  void validate() const;

  EpisodeOptions episode_options() const;
  ExperimentPlan plan() const;
  StudyConfig study() const;
};

/// Parses a JSON config on top of the defaults. Unknown keys are rejected so that a
/// typo cannot silently fall back to a default.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// The fully resolved config; config_from_json(config_to_json(c)) == c.
std::string config_to_json(const RunConfig& config);

bool operator==(const RunConfig& a, const RunConfig& b);

/// Builds the environment the config selects. The simulator's noise is keyed by seed.
std::unique_ptr<Environment> make_environment(const RunConfig& config, std::uint64_t seed);

}  // namespace reload
