#include "reload/sim.hpp"

#include "reload/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace reload {

bool SimConfig::valid() const noexcept {
  return base_demand.size() > 0 && (base_demand.array() > 0.0).all() && base_demand.allFinite() &&
         capacity > 0.0 && error_onset > 0.0 && error_onset < 1.0 && error_slope >= 0.0 &&
         noise_amplitude >= 0.0 && noise_amplitude <= 0.5;
}

void SimConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::ConfigInvalid, "sim: " + what); };
  if (base_demand.size() == 0) fail("base_demand is empty");
  if (!base_demand.allFinite() || (base_demand.array() <= 0.0).any())
    fail("base_demand entries must be positive");
  if (!(capacity > 0.0)) fail("capacity must be positive");
  if (!(error_onset > 0.0 && error_onset < 1.0)) fail("error_onset must lie in (0, 1)");
  if (!(error_slope >= 0.0)) fail("error_slope must be non-negative");
  if (!(noise_amplitude >= 0.0 && noise_amplitude <= 0.5)) fail("noise_amplitude must lie in [0, 0.5]");
}

double utilization(const Workload& w, const SimConfig& cfg) {
  if (w.size() != cfg.base_demand.size())
    throw Error(ErrorCode::InvalidArgument, "workload length does not match the simulator catalog");
  const double demand = w.cast<double>().dot(cfg.base_demand);
  return demand / (cfg.capacity * cfg.base_demand.mean());
}

PerfMeasurement simulate_mean(const Workload& w, const SimConfig& cfg) {
  if (total(w) <= 0) throw Error(ErrorCode::EmptyWorkload, "workload has no users");
  const double rho = utilization(w, cfg);
  const double service = cfg.base_demand.mean();

  constexpr double knee = 1.0 - kUtilizationGuard;
  PerfMeasurement m;
  if (rho < knee) {
    m.avg_response_time = service * (1.0 + rho / (1.0 - rho));
  } else {
    const double at_knee = service * (1.0 + knee / kUtilizationGuard);
    const double slope = service / (kUtilizationGuard * kUtilizationGuard);
    m.avg_response_time = at_knee + slope * (rho - knee);
  }
  m.error_rate = rho <= cfg.error_onset ? 0.0 : std::min(1.0, cfg.error_slope * (rho - cfg.error_onset));
  return m;
}

PerfMeasurement simulate(const Workload& w, const SimConfig& cfg, std::uint64_t episode,
                         std::uint64_t step) {
  PerfMeasurement m = simulate_mean(w, cfg);
  if (cfg.noise_amplitude > 0.0) {
    const StepKey key{cfg.seed, episode, step};
    const double a = cfg.noise_amplitude;
    m.avg_response_time *= 1.0 - a + 2.0 * a * counter_uniform(key, 0);
    m.error_rate = std::min(1.0, m.error_rate * (1.0 - a + 2.0 * a * counter_uniform(key, 1)));
  }
  return m;
}

SimConfig calibrate_default() {
  SimConfig cfg;
  cfg.base_demand.resize(11);
  // Home, Sign up page, Sign up, Login page, Login, Search page, Select product,
  // Add to cart, Payment, Confirm, Log out. Transactions that replay their
  // prerequisites (login, search, select) carry the cumulative cost.
  cfg.base_demand << 40, 45, 180, 45, 110, 150, 120, 260, 330, 420, 60;
  cfg.capacity = 60.0;
  cfg.error_onset = 0.80;
  cfg.error_slope = 1.5;
  cfg.noise_amplitude = 0.05;
  cfg.seed = 0;
  return cfg;
}

}  // namespace reload
