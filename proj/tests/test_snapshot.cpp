#include "reload/environment.hpp"
#include "reload/error.hpp"
#include "reload/snapshot.hpp"

#include "json.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace reload;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("reload_test_" + name);
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

}  // namespace

TEST(Snapshot, FreshTableRoundTrip) {
  PolicySnapshot s{QTable(11), TransactionCatalog::default_catalog(), {}, {}, 0};
  EXPECT_EQ(snapshot_from_text(to_text(s)), s);
  const auto path = temp_file("fresh.json");
  save_policy(s, path);
  EXPECT_EQ(load_policy(path), s);
}

TEST(Snapshot, TabularRoundTripAfterLearning) {
  SimEnvironment env;
  const auto s = run_initial_learning(env, {}, {}, 40, {}).snapshot;
  const auto path = temp_file("tabular.json");
  save_policy(s, path);
  const auto back = load_policy(path);
  EXPECT_EQ(back, s);
  EXPECT_EQ(back.q_table().visits, s.q_table().visits);
  EXPECT_EQ(back.version, kPolicyFormatVersion);
}

TEST(Snapshot, DqnRoundTripAfterLearning) {
  SimEnvironment env;
  const auto s = run_dqn_learning(env, {}, {}, 40, {}).snapshot;
  const auto path = temp_file("dqn.json");
  save_policy(s, path);
  EXPECT_EQ(load_policy(path), s);
}

TEST(Snapshot, Errors) {
  PolicySnapshot s{QTable(11), TransactionCatalog::default_catalog(), {}, {}, 3};
  auto j = nlohmann::json::parse(to_text(s));
  j["version"] = kPolicyFormatVersion + 1;
  EXPECT_EQ(code_of([&] { snapshot_from_text(j.dump()); }), ErrorCode::VersionMismatch);

  EXPECT_EQ(code_of([] { load_policy(temp_file("does_not_exist.json")); }), ErrorCode::IoFailure);
  EXPECT_EQ(code_of([] { snapshot_from_text("{not json"); }), ErrorCode::IoFailure);

  PolicySnapshot bad{QTable(4), TransactionCatalog::default_catalog(), {}, {}, 0};
  EXPECT_EQ(code_of([&] { snapshot_from_text(to_text(bad)); }), ErrorCode::CatalogMismatch);
}

TEST(Snapshot, RefusesNonFiniteValues) {
  PolicySnapshot s{QTable(11), TransactionCatalog::default_catalog(), {}, {}, 0};
  s.q_table().values(2, 3) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(code_of([&] { to_text(s); }), ErrorCode::InvalidArgument);
}
