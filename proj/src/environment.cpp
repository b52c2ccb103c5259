#include "reload/environment.hpp"

#include "reload/error.hpp"

namespace reload {

SimEnvironment::SimEnvironment(TransactionCatalog catalog, SimConfig config)
    : catalog_(std::move(catalog)), config_(std::move(config)) {
  config_.validate();
  if (static_cast<std::size_t>(config_.base_demand.size()) != catalog_.size())
    throw Error(ErrorCode::ConfigInvalid, "sim: base_demand length does not match the catalog");
}

SimEnvironment::SimEnvironment(SimConfig config)
    : SimEnvironment(config.base_demand.size() == 11
                         ? TransactionCatalog::default_catalog()
                         : [&] {
                             std::vector<std::string> names;
                             for (Eigen::Index i = 0; i < config.base_demand.size(); ++i)
                               names.push_back("T" + std::to_string(i));
                             return TransactionCatalog(std::move(names));
                           }(),
                     config) {}

PerfMeasurement execute_step(Environment& env, const Workload& w, std::uint64_t episode,
                             std::uint64_t step, std::string_view module) {
  try {
    return env.execute(w, episode, step);
  } catch (const Error& e) {
    throw Error(e.code(), std::string(module) + ": episode " + std::to_string(episode + 1) + ", step " +
                              std::to_string(step) + " (" + env.name() + "): " + e.detail());
  }
}

}  // namespace reload
