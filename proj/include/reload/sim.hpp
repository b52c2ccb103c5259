#pragma once

#include "reload/domain.hpp"
#include "reload/rng.hpp"

#include <Eigen/Core>

#include <cstdint>

namespace reload {

/// Parameters of the congestion model standing in for a live web application.
struct SimConfig {
  Eigen::VectorXd base_demand;  // ms per transaction, length T
  double capacity = 1.0;        // concurrent users at mean demand that saturate the system
  double error_onset = 0.8;     // utilization at which errors begin
  double error_slope = 1.0;     // error-rate growth per unit of over-utilization
  double noise_amplitude = 0.0; // multiplicative, in [0, 0.5]
  std::uint64_t seed = 0;

  bool valid() const noexcept;
  // Throws ConfigInvalid naming the offending field.
  void validate() const;

  friend bool operator==(const SimConfig& a, const SimConfig& b) {
    return a.base_demand.size() == b.base_demand.size() && a.base_demand == b.base_demand &&
           a.capacity == b.capacity && a.error_onset == b.error_onset &&
           a.error_slope == b.error_slope && a.noise_amplitude == b.noise_amplitude &&
           a.seed == b.seed;
  }
};

// Utilization guard: below 1 - kUtilizationGuard the response time follows the
// queueing curve, above it the curve continues linearly with matching slope.
inline constexpr double kUtilizationGuard = 0.01;

double utilization(const Workload& w, const SimConfig& cfg);

/// Noise-free response time and error rate for a workload.
PerfMeasurement simulate_mean(const Workload& w, const SimConfig& cfg);

/// simulate_mean with multiplicative noise keyed by (cfg.seed, episode, step).
PerfMeasurement simulate(const Workload& w, const SimConfig& cfg, std::uint64_t episode = 0,
                         std::uint64_t step = 0);

/// The shipped configuration for the default 11-transaction catalog.
SimConfig calibrate_default();

}  // namespace reload
