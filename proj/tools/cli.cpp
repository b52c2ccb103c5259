#include "cli.hpp"

#include "reload/config.hpp"
#include "reload/error.hpp"
#include "reload/harness.hpp"
#include "reload/http_actuator.hpp"
#include "reload/snapshot.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>

namespace reload {
namespace {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

struct Log {
  LogLevel level = LogLevel::Info;
  std::ostream* err = nullptr;

  void info(const std::string& msg) const {
    if (level >= LogLevel::Info) *err << "reload: " << msg << '\n';
  }
  void debug(const std::string& msg) const {
    if (level >= LogLevel::Debug) *err << "reload: " << msg << '\n';
  }
  void error(const std::string& msg) const { *err << "reload: error: " << msg << '\n'; }
};

Log make_log(std::ostream& err) {
  Log log{LogLevel::Info, &err};
  const char* env = std::getenv("RELOAD_LOG");
  if (!env) return log;
  const std::string v(env);
  if (v == "error")
    log.level = LogLevel::Error;
  else if (v == "debug")
    log.level = LogLevel::Debug;
  else if (v != "info")
    err << "reload: RELOAD_LOG='" << v << "' not one of error, info, debug; using info\n";
  return log;
}

struct Overrides {
  std::string config;
  std::string actuator;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string policy;
  std::string preset;
  std::string technique;
};

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (!o.actuator.empty()) {
    if (o.actuator == "sim")
      c.actuator = ActuatorKind::Sim;
    else if (o.actuator == "http")
      c.actuator = ActuatorKind::Http;
    else
      throw Error(ErrorCode::ConfigInvalid, "config: --actuator must be sim or http");
  }
  if (o.seed) c.seed = *o.seed;
  c.sim.seed = c.seed;
  if (!o.out.empty()) c.out = o.out;
  if (!o.preset.empty()) c.preset = o.preset;
  if (!o.technique.empty()) c.technique = technique_from_string(o.technique);
  c.validate();
  return c;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
}

void prepare_out(const RunConfig& c, const Log& log) {
  std::error_code ec;
  std::filesystem::create_directories(c.out, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + c.out.string() + ": " + ec.message());
  write_file(c.out / "effective_config.json", config_to_json(c));
  log.debug("effective config written to " + (c.out / "effective_config.json").string());
}

void write_report(const ExperimentReport& r, const std::filesystem::path& dir, const Log& log) {
  const auto stem = report_file_stem(r);
  write_file(dir / (stem + ".csv"), report_csv(r));
  write_file(dir / (stem + ".svg"), report_svg(r));
  log.info("wrote " + (dir / (stem + ".csv")).string());
}

std::string describe(const ExperimentReport& r) {
  std::string s = r.technique + " " + r.phase + ": " + std::to_string(r.episodes.size()) + " episodes";
  if (r.convergence_episode) s += ", converged at episode " + std::to_string(*r.convergence_episode);
  char buf[64];
  std::snprintf(buf, sizeof buf, ", mean final users %.2f", r.window_mean);
  return s + buf;
}

int cmd_learn(const Overrides& o, const Log& log) {
  const RunConfig c = resolve(o);
  if (c.technique == Technique::B || c.technique == Technique::C)
    throw Error(ErrorCode::ConfigInvalid, "config: learn needs a learning technique (A1..A4)");
  prepare_out(c, log);
  auto env = make_environment(c, c.seed);
  log.info("learning with " + std::string(label(c.technique)) + " on " + env->name() + ", seed " +
           std::to_string(c.seed));
  PolicySnapshot snapshot;
  const ExperimentReport report = run_plan(c.plan(), *env, &snapshot);
  write_report(report, c.out, log);
  if (report.failure) {
    log.error(*report.failure);
    return 1;
  }
  const auto policy = o.policy.empty() ? c.out / "policy.json" : std::filesystem::path(o.policy);
  save_policy(snapshot, policy);
  log.info(describe(report));
  log.info("policy saved to " + policy.string());
  return 0;
}

int cmd_transfer(const Overrides& o, const Log& log) {
  if (o.policy.empty()) throw Error(ErrorCode::ConfigInvalid, "config: transfer needs --policy");
  const RunConfig c = resolve(o);
  PolicySnapshot snapshot = load_policy(o.policy);
  if (!snapshot.is_tabular())
    throw Error(ErrorCode::InvalidArgument, "transfer: only tabular policies can be transferred");
  prepare_out(c, log);
  auto env = make_environment(c, c.seed);
  if (!(snapshot.catalog == env->catalog()))
    throw Error(ErrorCode::CatalogMismatch, "transfer: policy catalog does not match the configured catalog");

  LearningParams params = c.learning;
  params.epsilon = EpsilonSchedule::fixed(c.transfer_epsilon);
  EpisodeOptions options = c.episode_options();
  const std::size_t first = snapshot.episodes;
  log.info("transferring policy from episode " + std::to_string(first) + " over " +
           std::to_string(c.transfer_schedule.size()) + " objectives");
  ExperimentReport report =
      run_transfer_plan(Technique::A3, *env, &snapshot, params, c.transfer_schedule, options, first);
  write_report(report, c.out, log);
  if (report.failure) {
    log.error(*report.failure);
    return 1;
  }
  save_policy(snapshot, c.out / "policy.json");
  log.info(describe(report));
  return 0;
}

int cmd_experiment(const Overrides& o, const Log& log) {
  const RunConfig c = resolve(o);
  prepare_out(c, log);
  const EnvironmentFactory factory = [&c](std::uint64_t seed) { return make_environment(c, seed); };
  log.info("running " + c.preset + " study over " + std::to_string(c.seeds.size()) + " seeds");
  const StudyBundle bundle =
      c.preset == "efficiency" ? run_efficiency_study(c.study(), factory) : run_sensitivity_study(c.study(), factory);
  const auto files = write_bundle(bundle, c.out);
  log.info("wrote " + std::to_string(files.size()) + " files to " + c.out.string());
  int status = 0;
  for (const auto& r : bundle.reports) {
    log.debug(describe(r) + " (seed " + std::to_string(r.seed) + ")");
    if (r.failure) {
      log.error(*r.failure);
      status = 1;
    }
  }
  return status;
}

int cmd_dry_run(const Overrides& o, const Log& log, std::ostream& out) {
  Overrides http = o;
  if (http.actuator.empty()) http.actuator = "http";
  const RunConfig c = resolve(http);
  if (c.actuator != ActuatorKind::Http) throw Error(ErrorCode::ConfigInvalid, "config: dry-run needs the http actuator");
  const auto scripts = load_scripts(c.http.scripts, TransactionCatalog(c.catalog));
  const DryRunReport report = dry_run(scripts, c.http.run);
  for (const auto& t : report.transactions) {
    out << t.name << ": " << (t.ok() ? "ok" : "FAILED") << '\n';
    for (const auto& s : t.steps) {
      out << "  step " << s.index + 1 << ' ' << s.method << ' ' << s.path << " -> ";
      if (s.status) out << s.status;
      else out << "no response";
      char buf[32];
      std::snprintf(buf, sizeof buf, " (%.1f ms)", s.latency_ms);
      out << buf << (s.ok ? "" : " FAILED");
      if (!s.error.empty()) out << ": " << s.error;
      out << '\n';
    }
  }
  log.info(report.ok() ? "all scripts passed" : "dry run found failing steps");
  return report.ok() ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const Log log = make_log(err);
  CLI::App app{"reload: learns workloads that push a system past its performance thresholds"};
  app.require_subcommand(1);
  Overrides o;

  auto add_common = [&o](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--actuator", o.actuator, "sim or http");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--policy", o.policy, "policy file to write (learn) or read (transfer)");
    cmd->add_option("--preset", o.preset, "efficiency or sensitivity (experiment)");
    cmd->add_option("--technique", o.technique, "A1, A2, A3 or A4 (learn)");
  };
  CLI::App* learn = app.add_subcommand("learn", "initial learning; writes a policy and its episode report");
  CLI::App* transfer = app.add_subcommand("transfer", "reuse a policy over the transfer objective schedule");
  CLI::App* experiment = app.add_subcommand("experiment", "run the efficiency or sensitivity study");
  CLI::App* dry = app.add_subcommand("dry-run", "run every HTTP script once and report per-step results");
  for (CLI::App* cmd : {learn, transfer, experiment, dry}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (learn->parsed()) return cmd_learn(o, log);
    if (transfer->parsed()) return cmd_transfer(o, log);
    if (experiment->parsed()) return cmd_experiment(o, log);
    return cmd_dry_run(o, log, out);
  } catch (const Error& e) {
    log.error(e.what());
    return e.code() == ErrorCode::ConfigInvalid ? 2 : 1;
  }
}

}  // namespace reload
