#pragma once

#include "reload/domain.hpp"
#include "reload/dqn.hpp"
#include "reload/environment.hpp"
#include "reload/qlearning.hpp"
#include "reload/snapshot.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace reload {

enum class Technique { A1, A2, A3, A4, B, C };

std::string_view label(Technique t);
// Accepts A1..A4, B, C (case-insensitive). Throws ConfigInvalid otherwise.
Technique technique_from_string(std::string_view s);
bool is_tabular(Technique t);

// Learning parameters of the three tabular levels: fixed 0.2, fixed 0.5, decaying.
LearningParams learning_params_for(Technique t, const LearningParams& base);

/// One technique run for a number of episodes against one environment.
struct ExperimentPlan {
  Technique technique = Technique::A3;
  std::string name;  // report label; defaults to the technique label
  std::size_t episodes = 40;
  TestObjective objective;
  LearningParams learning;
  DqnParams dqn;
  EpisodeOptions options;
  std::size_t convergence_window = 5;
  double convergence_tol = 0.15;
  std::size_t savings_window = 10;

  void validate() const;
};

struct EpisodeRecord {
  std::size_t episode = 0;  // 1-based, continues across phases
  std::int64_t final_users = 0;
  bool terminal = false;
  TestObjective objective;

  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

struct ExperimentReport {
  std::string technique;
  std::string phase = "initial";  // "initial" or "transfer"
  std::uint64_t seed = 0;
  std::vector<EpisodeRecord> episodes;
  std::optional<std::size_t> convergence_episode;  // 1-based
  double window_mean = 0.0;    // mean DV over the last savings_window terminal episodes
  double window_stddev = 0.0;  // not part of the original study design
  std::size_t nonterminal = 0; // episodes excluded from the window
  std::optional<std::string> failure;

  std::vector<double> final_users() const;
  friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

/// (reference - agent) / reference. Throws ZeroReference when reference <= 0.
double cost_saving(double agent_mean, double reference_mean);

/// Fills the summary fields of a report from its episode list.
void summarize(ExperimentReport& report, std::size_t savings_window, std::size_t window, double tol);

/// Runs the plan. Learning techniques store their final policy in *snapshot when given.
/// Environment failures stop the run and leave the completed prefix plus report.failure.
ExperimentReport run_plan(const ExperimentPlan& plan, Environment& env, PolicySnapshot* snapshot = nullptr);

/// Transfer phase for one technique: A1..A3 resume from snapshot, B and C simply run
/// one episode per objective. Episode numbers continue from first_episode.
ExperimentReport run_transfer_plan(Technique technique, Environment& env, PolicySnapshot* snapshot,
                                   const LearningParams& transfer_params,
                                   const std::vector<TestObjective>& schedule,
                                   const EpisodeOptions& options, std::size_t first_episode);

/// Ten objectives drifting from (1500 ms, 0.20) by +100 ms and +0.01 per episode.
std::vector<TestObjective> drift_schedule(const TestObjective& start = {}, std::size_t count = 10,
                                          double rt_step = 100.0, double er_step = 0.01);

using EnvironmentFactory = std::function<std::unique_ptr<Environment>(std::uint64_t seed)>;

struct StudyConfig {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::size_t episodes = 40;
  std::size_t dqn_episodes = 45;
  TestObjective objective;
  std::vector<TestObjective> transfer_schedule = drift_schedule();
  LearningParams learning;  // alpha 0.5, gamma 0.5, decaying epsilon
  double transfer_epsilon = 0.05;
  DqnParams dqn;
  EpisodeOptions options;  // options.seed is replaced per seed
  std::size_t convergence_window = 5;
  double convergence_tol = 0.15;
  std::size_t savings_window = 10;
};

/// Aggregate of one technique across seeds.
struct SummaryRow {
  std::string technique;
  std::string phase;
  std::size_t runs = 0;
  double mean_final_users = 0.0;
  double stddev_final_users = 0.0;
  std::optional<double> median_convergence;  // none when fewer than half the runs converged
  std::size_t converged_runs = 0;
  std::size_t nonterminal = 0;
  std::optional<double> saving_vs_baseline;
  std::optional<double> saving_vs_random;

  friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

struct StudyBundle {
  std::string kind;  // "efficiency" or "sensitivity"
  std::vector<ExperimentReport> reports;
  std::vector<SummaryRow> summary;

  const SummaryRow* row(std::string_view technique, std::string_view phase = "initial") const;
  friend bool operator==(const StudyBundle&, const StudyBundle&) = default;
};

SummaryRow summarize_runs(const std::vector<const ExperimentReport*>& runs);

StudyBundle run_efficiency_study(const StudyConfig& config, const EnvironmentFactory& make_env);

/// alpha in {0.1, decaying} at gamma 0.5, gamma in {0.1, 0.9} at alpha 0.5, all with A3's epsilon.
struct SensitivityCell {
  std::string name;
  AlphaSchedule alpha;
  double gamma;
};
std::vector<SensitivityCell> sensitivity_grid();

StudyBundle run_sensitivity_study(const StudyConfig& config, const EnvironmentFactory& make_env);

// Report emission. File names are derived from technique, phase and seed.
std::string report_csv(const ExperimentReport& report);
std::string summary_csv(const std::vector<SummaryRow>& rows);
std::string report_svg(const ExperimentReport& report);
std::string bundle_to_json(const StudyBundle& bundle);
StudyBundle bundle_from_json(const std::string& text);

std::string report_file_stem(const ExperimentReport& report);
// Writes one CSV and SVG per report, summary.csv and bundle.json. Returns the files written.
std::vector<std::filesystem::path> write_bundle(const StudyBundle& bundle, const std::filesystem::path& dir);

}  // namespace reload
