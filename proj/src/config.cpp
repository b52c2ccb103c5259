#include "reload/config.hpp"

#include "reload/error.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace reload {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::ConfigInvalid, "config: " + what); }

// Rejects keys outside `allowed` so that misspelled settings are reported.
void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) invalid(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!ok.count(key)) invalid("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json objective_json(const TestObjective& o) { return {{"rt_ms", o.rt_threshold}, {"er", o.er_threshold}}; }

TestObjective objective_from(const json& j, const std::string& where) {
  check_keys(j, where, {"rt_ms", "er"});
  TestObjective o;
  read(j, "rt_ms", o.rt_threshold);
  read(j, "er", o.er_threshold);
  return o;
}

json epsilon_json(const EpsilonSchedule& e) {
  if (e.kind == EpsilonSchedule::Kind::Fixed) return e.value;
  return {{"initial", e.initial}, {"decay", e.decay}, {"floor", e.floor}};
}

// A number means a fixed epsilon, an object a decaying one.
EpsilonSchedule epsilon_from(const json& j, const std::string& where) {
  if (j.is_number()) return EpsilonSchedule::fixed(j.get<double>());
  check_keys(j, where, {"initial", "decay", "floor"});
  EpsilonSchedule e = EpsilonSchedule::decaying();
  read(j, "initial", e.initial);
  read(j, "decay", e.decay);
  read(j, "floor", e.floor);
  return e;
}

json alpha_json(const AlphaSchedule& a) {
  return a.kind == AlphaSchedule::Kind::Fixed ? json(a.value) : json("decaying");
}

AlphaSchedule alpha_from(const json& j) {
  if (j.is_number()) return AlphaSchedule::fixed(j.get<double>());
  if (j.is_string() && j.get<std::string>() == "decaying") return AlphaSchedule::decaying();
  invalid("learning.alpha must be a number or \"decaying\"");
}

json optional_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

void read_optional(const json& j, const char* key, std::optional<double>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null())
    out.reset();
  else
    out = j.at(key).get<double>();
}

RunConfig parse(const json& j) {
  check_keys(j, "", {"actuator", "technique", "episodes", "dqn_episodes", "objective", "transfer_schedule",
                     "learning", "transfer_epsilon", "dqn", "thresholds", "initial_per_transaction", "max_steps",
                     "catalog", "sim", "http", "seed", "seeds", "preset", "out", "convergence", "savings_window"});
  RunConfig c;
  if (j.contains("actuator")) {
    const auto a = j.at("actuator").get<std::string>();
    if (a == "sim")
      c.actuator = ActuatorKind::Sim;
    else if (a == "http")
      c.actuator = ActuatorKind::Http;
    else
      invalid("actuator must be \"sim\" or \"http\", got '" + a + "'");
  }
  if (j.contains("technique")) c.technique = technique_from_string(j.at("technique").get<std::string>());
  read(j, "episodes", c.episodes);
  read(j, "dqn_episodes", c.dqn_episodes);
  if (j.contains("objective")) c.objective = objective_from(j.at("objective"), "objective");
  if (j.contains("transfer_schedule")) {
    c.transfer_schedule.clear();
    for (const json& o : j.at("transfer_schedule")) c.transfer_schedule.push_back(objective_from(o, "transfer_schedule"));
  }
  if (j.contains("learning")) {
    const json& l = j.at("learning");
    check_keys(l, "learning", {"alpha", "gamma", "epsilon"});
    if (l.contains("alpha")) c.learning.alpha = alpha_from(l.at("alpha"));
    read(l, "gamma", c.learning.gamma);
    if (l.contains("epsilon")) c.learning.epsilon = epsilon_from(l.at("epsilon"), "learning.epsilon");
  }
  read(j, "transfer_epsilon", c.transfer_epsilon);
  if (j.contains("dqn")) {
    const json& d = j.at("dqn");
    check_keys(d, "dqn", {"hidden", "hidden_layers", "buffer_capacity", "batch_size", "sync_every", "learning_rate",
                          "gamma", "epsilon", "feature_cap"});
    read(d, "hidden", c.dqn.hidden);
    read(d, "hidden_layers", c.dqn.hidden_layers);
    read(d, "buffer_capacity", c.dqn.buffer_capacity);
    read(d, "batch_size", c.dqn.batch_size);
    read(d, "sync_every", c.dqn.sync_every);
    read(d, "learning_rate", c.dqn.learning_rate);
    read(d, "gamma", c.dqn.gamma);
    if (d.contains("epsilon")) c.dqn.epsilon = epsilon_from(d.at("epsilon"), "dqn.epsilon");
    read(d, "feature_cap", c.dqn.feature_cap);
  }
  if (j.contains("thresholds")) {
    const json& t = j.at("thresholds");
    check_keys(t, "thresholds", {"rt_low_ms", "rt_high_ms", "er_boundary"});
    read(t, "rt_low_ms", c.thresholds.rt_low);
    read_optional(t, "rt_high_ms", c.thresholds.rt_high);
    read_optional(t, "er_boundary", c.thresholds.er_boundary);
  }
  read(j, "initial_per_transaction", c.initial_per_transaction);
  read(j, "max_steps", c.max_steps);
  read(j, "catalog", c.catalog);
  if (j.contains("sim")) {
    const json& s = j.at("sim");
    check_keys(s, "sim", {"base_demand_ms", "capacity", "error_onset", "error_slope", "noise_amplitude"});
    if (s.contains("base_demand_ms")) {
      const auto d = s.at("base_demand_ms").get<std::vector<double>>();
      c.sim.base_demand = Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
    }
    read(s, "capacity", c.sim.capacity);
    read(s, "error_onset", c.sim.error_onset);
    read(s, "error_slope", c.sim.error_slope);
    read(s, "noise_amplitude", c.sim.noise_amplitude);
  }
  if (j.contains("http")) {
    const json& h = j.at("http");
    check_keys(h, "http", {"scripts", "base_url", "duration_s", "ramp_up_s", "timeout_ms", "think_time_ms"});
    if (h.contains("scripts")) c.http.scripts = h.at("scripts").get<std::string>();
    read(h, "base_url", c.http.run.base_url);
    read(h, "duration_s", c.http.run.duration_s);
    read(h, "ramp_up_s", c.http.run.ramp_up_s);
    read(h, "timeout_ms", c.http.run.timeout_ms);
    read(h, "think_time_ms", c.http.run.think_time_ms);
  }
  read(j, "seed", c.seed);
  read(j, "seeds", c.seeds);
  read(j, "preset", c.preset);
  if (j.contains("out")) c.out = j.at("out").get<std::string>();
  if (j.contains("convergence")) {
    const json& cv = j.at("convergence");
    check_keys(cv, "convergence", {"window", "tol"});
    read(cv, "window", c.convergence_window);
    read(cv, "tol", c.convergence_tol);
  }
  read(j, "savings_window", c.savings_window);
  c.sim.seed = c.seed;
  return c;
}

}  // namespace

void RunConfig::validate() const {
  if (episodes < 1 || dqn_episodes < 1) invalid("episodes must be at least 1");
  if (!objective.valid()) invalid("objective thresholds out of range");
  for (const auto& o : transfer_schedule)
    if (!o.valid()) invalid("transfer_schedule contains an objective out of range");
  if (!learning.valid()) invalid("learning parameters out of range");
  if (!(transfer_epsilon >= 0.0 && transfer_epsilon <= 1.0)) invalid("transfer_epsilon must lie in [0, 1]");
  if (dqn.hidden < 1 || dqn.batch_size < 1 || dqn.sync_every < 1 || dqn.buffer_capacity < dqn.batch_size ||
      !(dqn.learning_rate > 0.0) || !dqn.epsilon.valid())
    invalid("dqn parameters out of range");
  if (initial_per_transaction < 1) invalid("initial_per_transaction must be at least 1");
  if (max_steps < 1) invalid("max_steps must be at least 1");
  if (seeds.empty()) invalid("seeds must not be empty");
  if (preset != "efficiency" && preset != "sensitivity")
    invalid("unknown preset '" + preset + "' (expected efficiency or sensitivity)");
  if (convergence_window < 2) invalid("convergence.window must be at least 2");
  if (!(convergence_tol >= 0.0)) invalid("convergence.tol must be non-negative");
  if (savings_window < 1) invalid("savings_window must be at least 1");
  try {
    TransactionCatalog check(catalog);
    (void)check;
  } catch (const Error& e) {
    invalid(std::string("catalog: ") + e.detail());
  }
  if (actuator == ActuatorKind::Sim) {
    sim.validate();
    if (static_cast<std::size_t>(sim.base_demand.size()) != catalog.size())
      invalid("sim.base_demand_ms needs one entry per catalog transaction");
  } else {
    if (http.scripts.empty()) invalid("http actuator needs http.scripts");
    if (http.run.base_url.empty()) invalid("http actuator needs http.base_url");
    http.run.validate();
  }
}

EpisodeOptions RunConfig::episode_options() const {
  EpisodeOptions o;
  o.initial_per_transaction = initial_per_transaction;
  o.max_steps = max_steps;
  o.seed = seed;
  o.thresholds = thresholds;
  return o;
}

ExperimentPlan RunConfig::plan() const {
  ExperimentPlan p;
  p.technique = technique;
  p.episodes = technique == Technique::A4 ? dqn_episodes : episodes;
  p.objective = objective;
  p.learning = learning;
  p.dqn = dqn;
  p.options = episode_options();
  p.convergence_window = convergence_window;
  p.convergence_tol = convergence_tol;
  p.savings_window = savings_window;
  return p;
}

StudyConfig RunConfig::study() const {
  StudyConfig s;
  s.seeds = seeds;
  s.episodes = episodes;
  s.dqn_episodes = dqn_episodes;
  s.objective = objective;
  s.transfer_schedule = transfer_schedule;
  s.learning = learning;
  s.transfer_epsilon = transfer_epsilon;
  s.dqn = dqn;
  s.options = episode_options();
  s.convergence_window = convergence_window;
  s.convergence_tol = convergence_tol;
  s.savings_window = savings_window;
  return s;
}

RunConfig config_from_json(const std::string& text) {
  try {
    RunConfig c = parse(json::parse(text));
    c.validate();
    return c;
  } catch (const json::exception& e) {
    invalid(e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return config_from_json(text.str());
}

std::string config_to_json(const RunConfig& c) {
  json schedule = json::array();
  for (const auto& o : c.transfer_schedule) schedule.push_back(objective_json(o));
  const std::vector<double> demand(c.sim.base_demand.data(), c.sim.base_demand.data() + c.sim.base_demand.size());
  const json j = {
      {"actuator", c.actuator == ActuatorKind::Sim ? "sim" : "http"},
      {"technique", std::string(label(c.technique))},
      {"episodes", c.episodes},
      {"dqn_episodes", c.dqn_episodes},
      {"objective", objective_json(c.objective)},
      {"transfer_schedule", schedule},
      {"learning",
       {{"alpha", alpha_json(c.learning.alpha)}, {"gamma", c.learning.gamma}, {"epsilon", epsilon_json(c.learning.epsilon)}}},
      {"transfer_epsilon", c.transfer_epsilon},
      {"dqn",
       {{"hidden", c.dqn.hidden},
        {"hidden_layers", c.dqn.hidden_layers},
        {"buffer_capacity", c.dqn.buffer_capacity},
        {"batch_size", c.dqn.batch_size},
        {"sync_every", c.dqn.sync_every},
        {"learning_rate", c.dqn.learning_rate},
        {"gamma", c.dqn.gamma},
        {"epsilon", epsilon_json(c.dqn.epsilon)},
        {"feature_cap", c.dqn.feature_cap}}},
      {"thresholds",
       {{"rt_low_ms", c.thresholds.rt_low},
        {"rt_high_ms", optional_json(c.thresholds.rt_high)},
        {"er_boundary", optional_json(c.thresholds.er_boundary)}}},
      {"initial_per_transaction", c.initial_per_transaction},
      {"max_steps", c.max_steps},
      {"catalog", c.catalog},
      {"sim",
       {{"base_demand_ms", demand},
        {"capacity", c.sim.capacity},
        {"error_onset", c.sim.error_onset},
        {"error_slope", c.sim.error_slope},
        {"noise_amplitude", c.sim.noise_amplitude}}},
      {"http",
       {{"scripts", c.http.scripts.string()},
        {"base_url", c.http.run.base_url},
        {"duration_s", c.http.run.duration_s},
        {"ramp_up_s", c.http.run.ramp_up_s},
        {"timeout_ms", c.http.run.timeout_ms},
        {"think_time_ms", c.http.run.think_time_ms}}},
      {"seed", c.seed},
      {"seeds", c.seeds},
      {"preset", c.preset},
      {"out", c.out.string()},
      {"convergence", {{"window", c.convergence_window}, {"tol", c.convergence_tol}}},
      {"savings_window", c.savings_window},
  };
  return j.dump(2) + "\n";
}

bool operator==(const RunConfig& a, const RunConfig& b) { return config_to_json(a) == config_to_json(b); }

std::unique_ptr<Environment> make_environment(const RunConfig& config, std::uint64_t seed) {
  TransactionCatalog catalog(config.catalog);
  if (config.actuator == ActuatorKind::Http) {
    auto scripts = load_scripts(config.http.scripts, catalog);
    return std::make_unique<HttpEnvironment>(std::move(catalog), std::move(scripts), config.http.run);
  }
  SimConfig sim = config.sim;
  sim.seed = seed;
  return std::make_unique<SimEnvironment>(std::move(catalog), std::move(sim));
}

}  // namespace reload
