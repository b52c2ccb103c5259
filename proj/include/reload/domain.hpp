#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace reload {

struct TransactionId {
  std::size_t index = 0;
  std::string name;

  friend bool operator==(const TransactionId&, const TransactionId&) = default;
};

class TransactionCatalog {
 public:
  TransactionCatalog() = default;
  // Throws InvalidArgument on an empty list or an empty name.
  explicit TransactionCatalog(std::vector<std::string> names);

  // Home, Sign up page, Sign up, Login page, Login, Search page, Select product,
  // Add to cart, Payment, Confirm, Log out.
  static TransactionCatalog default_catalog();

  std::size_t size() const noexcept { return transactions_.size(); }
  const TransactionId& operator[](std::size_t i) const { return transactions_.at(i); }
  const std::vector<TransactionId>& transactions() const noexcept { return transactions_; }
  std::vector<std::string> names() const;
  // Returns size() when absent.
  std::size_t find(std::string_view name) const noexcept;

  friend bool operator==(const TransactionCatalog&, const TransactionCatalog&) = default;

 private:
  std::vector<TransactionId> transactions_;
};

/// Per-transaction concurrent virtual-user counts. users[j] is the load on transaction j.
using Workload = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

std::int64_t total(const Workload& w);
Workload uniform_workload(std::size_t transactions, std::int64_t per_transaction);

struct PerfMeasurement {
  double avg_response_time = 0.0;  // ms
  double error_rate = 0.0;         // fraction in [0, 1]

  friend bool operator==(const PerfMeasurement&, const PerfMeasurement&) = default;
};

struct StateThresholds {
  double rt_low = 500.0;
  double rt_high = 1500.0;
  double er_boundary = 0.20;

  bool valid() const noexcept;
  friend bool operator==(const StateThresholds&, const StateThresholds&) = default;
};

struct TestObjective {
  double rt_threshold = 1500.0;  // ms
  double er_threshold = 0.20;

  bool valid() const noexcept;
  friend bool operator==(const TestObjective&, const TestObjective&) = default;
};

// Default thresholds: fixed Low/Normal boundary, High classes tied to the objective.
StateThresholds thresholds_for(const TestObjective& objective, double rt_low = 500.0);

enum class RtClass : std::uint8_t { Low = 0, Normal = 1, High = 2 };
enum class ErClass : std::uint8_t { Low = 0, High = 1 };

struct SutState {
  RtClass rt = RtClass::Low;
  ErClass er = ErClass::Low;

  static constexpr std::size_t kCount = 6;

  // Row of the Q-table: 2 * rt_rank + er_rank.
  std::size_t index() const noexcept {
    return 2 * static_cast<std::size_t>(rt) + static_cast<std::size_t>(er);
  }
  static SutState from_index(std::size_t i);

  friend bool operator==(const SutState&, const SutState&) = default;
};

std::string to_string(const SutState& s);

/// Action k scales the load of transaction k by +1/3.
struct ActionId {
  std::size_t k = 0;
  friend bool operator==(const ActionId&, const ActionId&) = default;
};

SutState classify_state(const PerfMeasurement& m, const StateThresholds& th);

/// (RT / RT_threshold)^2 + (ER / ER_threshold)^2
double reward(const PerfMeasurement& m, const TestObjective& obj);

/// users[k] + ceil(users[k] / 3), with a zero-load transaction bootstrapped to 1.
Workload apply_action(const Workload& w, ActionId a);

/// Strict violation of either threshold.
bool objective_met(const PerfMeasurement& m, const TestObjective& obj);

}  // namespace reload
