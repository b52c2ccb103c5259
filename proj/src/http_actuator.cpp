#include "reload/http_actuator.hpp"

#include "reload/error.hpp"

#include "httplib.h"
#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace reload {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

void RunSpec::validate() const {
  if (!(duration_s > 0.0)) throw Error(ErrorCode::ConfigInvalid, "http: duration must be positive");
  if (!(ramp_up_s >= 0.0) || ramp_up_s > duration_s)
    throw Error(ErrorCode::ConfigInvalid, "http: ramp_up must lie in [0, duration]");
  if (base_url.empty()) throw Error(ErrorCode::ConfigInvalid, "http: base_url is empty");
  if (timeout_ms <= 0) throw Error(ErrorCode::ConfigInvalid, "http: timeout must be positive");
  if (think_time_ms < 0) throw Error(ErrorCode::ConfigInvalid, "http: think time must be non-negative");
}

RunStats& RunStats::operator+=(const RunStats& o) {
  issued += o.issued;
  completed += o.completed;
  failed += o.failed;
  timed_out += o.timed_out;
  latency_us += o.latency_us;
  return *this;
}

PerfMeasurement RunStats::measurement() const {
  if (issued == 0) return {};
  const double n = static_cast<double>(issued);
  return {static_cast<double>(latency_us) / 1000.0 / n, static_cast<double>(failed + timed_out) / n};
}

ScriptMap scripts_from_text(const std::string& text, const TransactionCatalog& catalog) {
  ScriptMap scripts;
  try {
    const json j = json::parse(text);
    for (const json& tx : j.at("transactions")) {
      const auto name = tx.at("name").get<std::string>();
      const std::size_t index = catalog.find(name);
      if (index == catalog.size())
        throw Error(ErrorCode::ConfigInvalid, "scripts: transaction '" + name + "' is not in the catalog");
      TransactionScript script{catalog[index], {}};
      for (const json& s : tx.at("steps")) {
        HttpStep step;
        step.method = s.value("method", step.method);
        step.path = s.value("path", step.path);
        step.headers = s.value("headers", step.headers);
        step.body = s.value("body", step.body);
        step.content_type = s.value("content_type", step.content_type);
        step.expect_status_class = s.value("expect_status", step.expect_status_class);
        if (s.contains("expect_body")) step.expect_body = s.at("expect_body").get<std::string>();
        if (step.method != "GET" && step.method != "POST" && step.method != "PUT" &&
            step.method != "DELETE" && step.method != "HEAD")
          throw Error(ErrorCode::ConfigInvalid, "scripts: unsupported method " + step.method);
        script.steps.push_back(std::move(step));
      }
      if (script.steps.empty())
        throw Error(ErrorCode::ConfigInvalid, "scripts: transaction '" + name + "' has no steps");
      scripts[index] = std::move(script);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("scripts: ") + e.what());
  }
  return scripts;
}

ScriptMap load_scripts(const std::filesystem::path& path, const TransactionCatalog& catalog) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read scripts file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return scripts_from_text(buf.str(), catalog);
}

namespace {

std::string substitute(std::string s, std::size_t user, std::uint64_t iteration) {
  auto replace_all = [&s](const std::string& key, const std::string& value) {
    for (std::size_t pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size()))
      s.replace(pos, key.size(), value);
  };
  replace_all("${user}", std::to_string(user));
  replace_all("${iter}", std::to_string(iteration));
  return s;
}

std::unique_ptr<httplib::Client> make_client(const RunSpec& spec) {
  auto client = std::make_unique<httplib::Client>(spec.base_url);
  if (!client->is_valid()) throw Error(ErrorCode::ConfigInvalid, "http: invalid base_url " + spec.base_url);
  const auto timeout = std::chrono::milliseconds(spec.timeout_ms);
  client->set_connection_timeout(timeout);
  client->set_read_timeout(timeout);
  client->set_write_timeout(timeout);
  client->set_keep_alive(true);
  client->set_tcp_nodelay(true);
  return client;
}

enum class Outcome { Completed, Failed, TimedOut };

struct StepOutcome {
  Outcome outcome = Outcome::Failed;
  int status = 0;
  std::int64_t latency_us = 0;
  std::string error;
};

StepOutcome send(httplib::Client& client, const HttpStep& step, const RunSpec& spec, std::size_t user,
                 std::uint64_t iteration) {
  const std::string path = substitute(step.path, user, iteration);
  httplib::Headers headers(step.headers.begin(), step.headers.end());
  const auto start = Clock::now();
  httplib::Result res = [&] {
    if (step.method == "GET") return client.Get(path, headers);
    if (step.method == "HEAD") return client.Head(path, headers);
    if (step.method == "DELETE") return client.Delete(path, headers);
    const std::string body = substitute(step.body, user, iteration);
    if (step.method == "PUT") return client.Put(path, headers, body, step.content_type);
    return client.Post(path, headers, body, step.content_type);
  }();
  StepOutcome out;
  out.latency_us = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start).count();
  if (!res) {
    const auto err = res.error();
    out.error = httplib::to_string(err);
    if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
      out.outcome = Outcome::TimedOut;
      out.latency_us = std::int64_t{spec.timeout_ms} * 1000;
    }
    return out;
  }
  out.status = res->status;
  const bool status_ok = res->status / 100 == step.expect_status_class;
  const bool body_ok = !step.expect_body || res->body.find(*step.expect_body) != std::string::npos;
  out.outcome = status_ok && body_ok ? Outcome::Completed : Outcome::Failed;
  if (!status_ok) out.error = "unexpected status " + std::to_string(res->status);
  else if (!body_ok) out.error = "response body lacks expected text";
  return out;
}

void require_reachable(const RunSpec& spec) {
  auto client = make_client(spec);
  client->set_keep_alive(false);
  auto res = client->Head("/");
  if (!res && (res.error() == httplib::Error::Connection || res.error() == httplib::Error::ConnectionTimeout ||
               res.error() == httplib::Error::BindIPAddress || res.error() == httplib::Error::Unknown))
    throw Error(ErrorCode::ConnectFailure, spec.base_url + " is unreachable (" +
                                               httplib::to_string(res.error()) + ")");
}

}  // namespace

RunStats execute_detailed(const Workload& w, const ScriptMap& scripts, const RunSpec& spec) {
  spec.validate();
  if (total(w) <= 0) throw Error(ErrorCode::EmptyWorkload, "workload has no users");
  if ((w.array() < 0).any()) throw Error(ErrorCode::InvalidArgument, "workload has negative entries");
  for (Eigen::Index j = 0; j < w.size(); ++j)
    if (w(j) > 0 && !scripts.contains(static_cast<std::size_t>(j)))
      throw Error(ErrorCode::MissingScript, "no script for loaded transaction " + std::to_string(j));
  require_reachable(spec);

  std::vector<const TransactionScript*> assignments;
  for (Eigen::Index j = 0; j < w.size(); ++j)
    for (std::int64_t u = 0; u < w(j); ++u) assignments.push_back(&scripts.at(static_cast<std::size_t>(j)));

  const std::size_t users = assignments.size();
  const auto start = Clock::now();
  const auto deadline = start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(spec.duration_s));
  RunStats totals;
  std::mutex totals_mutex;

  std::vector<std::thread> threads;
  threads.reserve(users);
  for (std::size_t user = 0; user < users; ++user) {
    threads.emplace_back([&, user] {
      const double offset = users > 1 ? spec.ramp_up_s * static_cast<double>(user) / static_cast<double>(users) : 0.0;
      std::this_thread::sleep_until(start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(offset)));
      RunStats local;
      auto client = make_client(spec);
      const TransactionScript& script = *assignments[user];
      for (std::uint64_t iter = 0; Clock::now() < deadline; ++iter) {
        for (const HttpStep& step : script.steps) {
          if (Clock::now() >= deadline) break;
          const StepOutcome out = send(*client, step, spec, user, iter);
          ++local.issued;
          local.latency_us += out.latency_us;
          switch (out.outcome) {
            case Outcome::Completed: ++local.completed; break;
            case Outcome::Failed: ++local.failed; break;
            case Outcome::TimedOut: ++local.timed_out; break;
          }
        }
        if (spec.think_time_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(spec.think_time_ms));
      }
      std::lock_guard lock(totals_mutex);
      totals += local;
    });
  }
  for (auto& t : threads) t.join();
  return totals;
}

PerfMeasurement execute(const Workload& w, const ScriptMap& scripts, const RunSpec& spec) {
  return execute_detailed(w, scripts, spec).measurement();
}

bool TransactionReport::ok() const {
  return std::all_of(steps.begin(), steps.end(), [](const StepReport& s) { return s.ok; });
}

std::optional<std::size_t> TransactionReport::first_failure() const {
  for (const auto& s : steps)
    if (!s.ok) return s.index;
  return std::nullopt;
}

bool DryRunReport::ok() const {
  return std::all_of(transactions.begin(), transactions.end(), [](const TransactionReport& t) { return t.ok(); });
}

DryRunReport dry_run(const ScriptMap& scripts, const RunSpec& spec) {
  spec.validate();
  require_reachable(spec);
  DryRunReport report;
  for (const auto& [index, script] : scripts) {
    auto client = make_client(spec);
    TransactionReport tx{script.transaction.name, {}};
    for (std::size_t i = 0; i < script.steps.size(); ++i) {
      const HttpStep& step = script.steps[i];
      const StepOutcome out = send(*client, step, spec, 0, 0);
      tx.steps.push_back({i, step.method, substitute(step.path, 0, 0), out.status,
                          static_cast<double>(out.latency_us) / 1000.0, out.outcome == Outcome::Completed,
                          out.error});
    }
    report.transactions.push_back(std::move(tx));
  }
  return report;
}

HttpEnvironment::HttpEnvironment(TransactionCatalog catalog, ScriptMap scripts, RunSpec spec)
    : catalog_(std::move(catalog)), scripts_(std::move(scripts)), spec_(std::move(spec)) {
  spec_.validate();
}

PerfMeasurement HttpEnvironment::execute(const Workload& w, std::uint64_t, std::uint64_t) {
  return reload::execute(w, scripts_, spec_);
}

}  // namespace reload
