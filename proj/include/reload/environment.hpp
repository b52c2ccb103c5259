#pragma once

#include "reload/domain.hpp"
#include "reload/sim.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace reload {

/// Anything that can run a workload against a system under test and report what it saw.
/// (episode, step) identify the call so that stochastic environments can replay exactly.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const TransactionCatalog& catalog() const = 0;
  virtual PerfMeasurement execute(const Workload& w, std::uint64_t episode, std::uint64_t step) = 0;
  virtual std::string name() const = 0;
};

/// env.execute with failures re-raised as "<module>: episode E, step S: ..." (same code).
PerfMeasurement execute_step(Environment& env, const Workload& w, std::uint64_t episode,
                             std::uint64_t step, std::string_view module);

class SimEnvironment final : public Environment {
 public:
  SimEnvironment(TransactionCatalog catalog, SimConfig config);
  explicit SimEnvironment(SimConfig config = calibrate_default());

  const TransactionCatalog& catalog() const override { return catalog_; }
  const SimConfig& config() const noexcept { return config_; }
  PerfMeasurement execute(const Workload& w, std::uint64_t episode, std::uint64_t step) override {
    return simulate(w, config_, episode, step);
  }
  std::string name() const override { return "sim"; }

 private:
  TransactionCatalog catalog_;
  SimConfig config_;
};

}  // namespace reload
