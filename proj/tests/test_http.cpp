#include "reload/error.hpp"
#include "reload/http_actuator.hpp"
#include "reload/rng.hpp"

#include "stub_server.hpp"

#include <gtest/gtest.h>

#include <atomic>

using namespace reload;

namespace {

const TransactionCatalog kTwo({"ok", "bad"});

ScriptMap two_scripts() {
  return scripts_from_text(R"({"transactions": [
    {"name": "ok",  "steps": [{"method": "GET", "path": "/ok?u=${user}"}]},
    {"name": "bad", "steps": [{"method": "GET", "path": "/bad"}]}]})",
                           kTwo);
}

void sleep_ms(int ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); }

RunSpec spec_for(const std::string& url, double duration = 0.4) {
  RunSpec s;
  s.base_url = url;
  s.duration_s = duration;
  s.timeout_ms = 1000;
  return s;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

Workload two(std::int64_t a, std::int64_t b) {
  Workload w(2);
  w << a, b;
  return w;
}

}  // namespace

TEST(Scripts, ParseAndReject) {
  const auto s = two_scripts();
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.at(0).transaction.name, "ok");
  EXPECT_EQ(s.at(0).steps.front().path, "/ok?u=${user}");
  EXPECT_EQ(s.at(1).steps.front().expect_status_class, 2);
  EXPECT_EQ(code_of([] { scripts_from_text(R"({"transactions": [{"name": "nope", "steps": [{}]}]})", kTwo); }),
            ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of([] { scripts_from_text(R"({"transactions": [{"name": "ok", "steps": []}]})", kTwo); }),
            ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of([] { scripts_from_text("[", kTwo); }), ErrorCode::ConfigInvalid);
}

TEST(Execute, Preconditions) {
  StubServer stub;
  const auto url = stub.start();
  ScriptMap only_ok = two_scripts();
  only_ok.erase(1);
  EXPECT_EQ(code_of([&] { execute(two(1, 1), only_ok, spec_for(url)); }), ErrorCode::MissingScript);
  EXPECT_EQ(code_of([&] { execute(two(0, 0), two_scripts(), spec_for(url)); }), ErrorCode::EmptyWorkload);
  stub.stop();
  EXPECT_EQ(code_of([&] { execute(two(1, 0), two_scripts(), spec_for(url)); }), ErrorCode::ConnectFailure);
}

TEST(Execute, FastStubHasNoErrors) {
  StubServer stub;
  stub.server().Get("/ok", [](const httplib::Request&, httplib::Response& res) {
    sleep_ms(10);
    res.set_content("fine", "text/plain");
  });
  const auto url = stub.start();
  const auto stats = execute_detailed(two(3, 0), two_scripts(), spec_for(url, 0.5));
  EXPECT_GT(stats.issued, 10);
  EXPECT_EQ(stats.completed, stats.issued);
  const auto m = stats.measurement();
  EXPECT_EQ(m.error_rate, 0.0);
  EXPECT_GE(m.avg_response_time, 5.0);
  EXPECT_LE(m.avg_response_time, 50.0);
}

TEST(Execute, HalfTheTrafficFails) {
  StubServer stub;
  auto handler = [](int status) {
    return [status](const httplib::Request&, httplib::Response& res) {
      sleep_ms(5);
      res.status = status;
      res.set_content("x", "text/plain");
    };
  };
  stub.server().Get("/ok", handler(200));
  stub.server().Get("/bad", handler(500));
  const auto url = stub.start();
  const auto stats = execute_detailed(two(4, 4), two_scripts(), spec_for(url, 0.6));
  EXPECT_EQ(stats.completed + stats.failed + stats.timed_out, stats.issued);
  EXPECT_NEAR(stats.measurement().error_rate, 0.5, 0.1);
}

// Randomized delays, failure ratios and timeouts; the counters must always add up.
TEST(Execute, AccountingIdentityHolds) {
  CounterRng rng(41);
  for (int scenario = 0; scenario < 10; ++scenario) {
    const int delay = static_cast<int>(rng.below(15));
    const std::size_t fail_every = 1 + rng.below(4);
    const bool slow = rng.below(3) == 0;
    StubServer stub;
    auto counter = std::make_shared<std::atomic<std::size_t>>(0);
    stub.server().Get("/ok", [=](const httplib::Request&, httplib::Response& res) {
      sleep_ms(delay);
      res.status = (++*counter % fail_every == 0) ? 503 : 200;
    });
    stub.server().Get("/bad", [=](const httplib::Request&, httplib::Response& res) {
      sleep_ms(slow ? 250 : delay);
      res.status = 200;
    });
    const auto url = stub.start();
    RunSpec spec = spec_for(url, 0.3);
    spec.timeout_ms = 100;
    spec.ramp_up_s = 0.1 * rng.uniform();
    const auto w = two(1 + static_cast<std::int64_t>(rng.below(4)), static_cast<std::int64_t>(rng.below(3)));
    const auto stats = execute_detailed(w, two_scripts(), spec);
    EXPECT_GT(stats.issued, 0);
    EXPECT_EQ(stats.completed + stats.failed + stats.timed_out, stats.issued) << "scenario " << scenario;
    if (slow && w(1) > 0) EXPECT_GT(stats.timed_out, 0) << "scenario " << scenario;
    const auto m = stats.measurement();
    EXPECT_GE(m.error_rate, 0.0);
    EXPECT_LE(m.error_rate, 1.0);
  }
}

TEST(RunStats, MergeIsOrderIndependent) {
  RunStats a{5, 3, 1, 1, 900}, b{7, 7, 0, 0, 1400}, c{2, 0, 2, 0, 100};
  RunStats x = a, y = c;
  x += b;
  x += c;
  y += b;
  y += a;
  EXPECT_EQ(x, y);
  EXPECT_EQ(x.issued, 14);
}

TEST(DryRun, PinpointsFailingStep) {
  StubServer stub;
  stub.server().Get("/ok", [](const httplib::Request&, httplib::Response& res) { res.set_content("welcome", "text/plain"); });
  stub.server().Post("/login", [](const httplib::Request& req, httplib::Response& res) {
    res.status = req.body.find("user7") != std::string::npos ? 200 : 401;
  });
  const auto url = stub.start();
  const auto scripts = scripts_from_text(R"({"transactions": [
    {"name": "ok", "steps": [{"path": "/ok", "expect_body": "welcome"}]},
    {"name": "bad", "steps": [
      {"path": "/ok"},
      {"method": "POST", "path": "/login", "body": "name=user${user}", "content_type": "text/plain"},
      {"path": "/missing"}]}]})",
                                         kTwo);
  const auto report = dry_run(scripts, spec_for(url));
  ASSERT_EQ(report.transactions.size(), 2u);
  EXPECT_TRUE(report.transactions[0].ok());
  const auto& bad = report.transactions[1];
  EXPECT_FALSE(report.ok());
  EXPECT_EQ(bad.first_failure(), 1u);
  EXPECT_EQ(bad.steps[1].status, 401);
  EXPECT_EQ(bad.steps[2].status, 404);
  EXPECT_TRUE(bad.steps[0].ok);

  stub.stop();
  EXPECT_EQ(code_of([&] { dry_run(scripts, spec_for(url)); }), ErrorCode::ConnectFailure);
}

TEST(HttpEnvironment, ValidatesSpec) {
  RunSpec bad;
  EXPECT_EQ(code_of([&] { HttpEnvironment(kTwo, two_scripts(), bad); }), ErrorCode::ConfigInvalid);
}
