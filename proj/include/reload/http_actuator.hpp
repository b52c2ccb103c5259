#pragma once

#include "reload/domain.hpp"
#include "reload/environment.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace reload {

struct HttpStep {
  std::string method = "GET";
  std::string path = "/";  // ${user} and ${iter} are substituted per request
  std::map<std::string, std::string> headers;
  std::string body;        // same substitutions as path
  std::string content_type = "application/x-www-form-urlencoded";
  int expect_status_class = 2;             // 2 accepts any 2xx
  std::optional<std::string> expect_body;  // required substring, if set
};

/// One transaction with its prerequisites, replayed in order by each virtual user.
struct TransactionScript {
  TransactionId transaction;
  std::vector<HttpStep> steps;
};

using ScriptMap = std::map<std::size_t, TransactionScript>;

struct RunSpec {
  double duration_s = 30.0;
  double ramp_up_s = 0.0;
  std::string base_url;
  int timeout_ms = 5000;
  int think_time_ms = 0;

  void validate() const;
};

/// Exact request accounting for one run. Latencies are kept in whole microseconds
/// so that merging per-user counters is associative and commutative.
struct RunStats {
  std::int64_t issued = 0;
  std::int64_t completed = 0;  // response received and success predicate held
  std::int64_t failed = 0;     // wrong status, missing body text, or transport error
  std::int64_t timed_out = 0;
  std::int64_t latency_us = 0;

  RunStats& operator+=(const RunStats& o);
  PerfMeasurement measurement() const;
  friend bool operator==(const RunStats&, const RunStats&) = default;
};

/// Parses the scripts file and binds each transaction to the catalog entry of the same name.
ScriptMap load_scripts(const std::filesystem::path& path, const TransactionCatalog& catalog);
ScriptMap scripts_from_text(const std::string& text, const TransactionCatalog& catalog);

RunStats execute_detailed(const Workload& w, const ScriptMap& scripts, const RunSpec& spec);

// MissingScript, ConnectFailure, EmptyWorkload.
PerfMeasurement execute(const Workload& w, const ScriptMap& scripts, const RunSpec& spec);

struct StepReport {
  std::size_t index = 0;
  std::string method;
  std::string path;
  int status = 0;  // 0 when no response arrived
  double latency_ms = 0.0;
  bool ok = false;
  std::string error;
};

struct TransactionReport {
  std::string name;
  std::vector<StepReport> steps;
  bool ok() const;
  // Index of the first failing step, if any.
  std::optional<std::size_t> first_failure() const;
};

struct DryRunReport {
  std::vector<TransactionReport> transactions;
  bool ok() const;
};

/// Runs every script once with a single user.
DryRunReport dry_run(const ScriptMap& scripts, const RunSpec& spec);

class HttpEnvironment final : public Environment {
 public:
  HttpEnvironment(TransactionCatalog catalog, ScriptMap scripts, RunSpec spec);

  const TransactionCatalog& catalog() const override { return catalog_; }
  PerfMeasurement execute(const Workload& w, std::uint64_t episode, std::uint64_t step) override;
  std::string name() const override { return "http"; }

 private:
  TransactionCatalog catalog_;
  ScriptMap scripts_;
  RunSpec spec_;
};

}  // namespace reload
