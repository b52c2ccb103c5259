#pragma once

#include "reload/domain.hpp"
#include "reload/dqn.hpp"
#include "reload/qlearning.hpp"

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace reload {

inline constexpr int kPolicyFormatVersion = 1;

/// A learned policy plus everything needed to resume it against another objective.
struct PolicySnapshot {
  std::variant<QTable, QNetworkd> policy;
  TransactionCatalog catalog;
  StateThresholds thresholds;
  TestObjective objective;
  std::size_t episodes = 0;
  int version = kPolicyFormatVersion;

  bool is_tabular() const noexcept { return std::holds_alternative<QTable>(policy); }
  QTable& q_table() { return std::get<QTable>(policy); }
  const QTable& q_table() const { return std::get<QTable>(policy); }
  QNetworkd& network() { return std::get<QNetworkd>(policy); }
  const QNetworkd& network() const { return std::get<QNetworkd>(policy); }

  friend bool operator==(const PolicySnapshot&, const PolicySnapshot&) = default;
};

struct InitialLearningResult {
  PolicySnapshot snapshot;
  std::vector<EpisodeTrace> traces;
  std::optional<std::size_t> convergence;
};

std::string to_text(const PolicySnapshot& snapshot);
PolicySnapshot snapshot_from_text(const std::string& text);

// IoFailure on unreadable/unwritable paths, VersionMismatch on a foreign format version.
void save_policy(const PolicySnapshot& snapshot, const std::filesystem::path& path);
PolicySnapshot load_policy(const std::filesystem::path& path);

}  // namespace reload
