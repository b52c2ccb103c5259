#include "reload/baselines.hpp"
#include "reload/environment.hpp"
#include "reload/error.hpp"
#include "reload/sim.hpp"

#include <gtest/gtest.h>

using namespace reload;

namespace {

SimConfig quiet() {
  SimConfig c = calibrate_default();
  c.noise_amplitude = 0.0;
  return c;
}

}  // namespace

TEST(Sim, EmptyWorkloadThrows) {
  try {
    simulate(uniform_workload(11, 0), calibrate_default());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyWorkload);
  }
}

TEST(Sim, PureWithoutNoise) {
  const auto w = uniform_workload(11, 4);
  EXPECT_EQ(simulate(w, quiet(), 3, 7), simulate(w, quiet(), 3, 7));
  EXPECT_EQ(simulate(w, quiet(), 3, 7), simulate(w, quiet(), 9, 1));
}

TEST(Sim, NoiseKeyedByStep) {
  const auto cfg = calibrate_default();
  const auto w = uniform_workload(11, 4);
  EXPECT_EQ(simulate(w, cfg, 3, 7), simulate(w, cfg, 3, 7));
  EXPECT_NE(simulate(w, cfg, 3, 7), simulate(w, cfg, 3, 8));
  const auto mean = simulate_mean(w, cfg);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto m = simulate(w, cfg, 0, s);
    EXPECT_LE(std::abs(m.avg_response_time / mean.avg_response_time - 1.0), cfg.noise_amplitude + 1e-12);
  }
}

// Brute force over every workload on a small grid: growing any coordinate never helps.
TEST(Sim, MonotoneOnGrid) {
  SimConfig cfg;
  cfg.base_demand = Eigen::Vector3d(40, 120, 400);
  cfg.capacity = 8;
  cfg.error_onset = 0.7;
  cfg.error_slope = 2.0;
  for (int a = 0; a < 12; ++a)
    for (int b = 0; b < 12; ++b)
      for (int c = 0; c < 12; ++c) {
        if (a + b + c == 0) continue;
        Workload w(3);
        w << a, b, c;
        const auto m = simulate(w, cfg);
        EXPECT_GT(m.avg_response_time, 0.0);
        EXPECT_GE(m.error_rate, 0.0);
        EXPECT_LE(m.error_rate, 1.0);
        for (int k = 0; k < 3; ++k) {
          Workload up = w;
          up(k) += 1;
          const auto n = simulate(up, cfg);
          EXPECT_GE(n.avg_response_time, m.avg_response_time) << w.transpose() << " k=" << k;
          EXPECT_GE(n.error_rate, m.error_rate) << w.transpose() << " k=" << k;
        }
      }
}

TEST(Sim, SaturatesEventually) {
  const auto cfg = quiet();
  for (double rt : {1500.0, 5000.0, 50000.0}) {
    Workload w = uniform_workload(11, 1);
    int steps = 0;
    while (!objective_met(simulate(w, cfg), {rt, 0.99}) && steps < 200) {
      w = scale_uniformly(w);
      ++steps;
    }
    EXPECT_LT(steps, 200) << rt;
  }
}

TEST(Sim, DefaultConfig) {
  const auto cfg = calibrate_default();
  EXPECT_TRUE(cfg.valid());
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.base_demand.size(), 11);
  EXPECT_GE(cfg.base_demand.maxCoeff() / cfg.base_demand.minCoeff(), 4.0);

  SimEnvironment env(cfg);
  const auto run = run_standard_baseline(env, {}, {});
  EXPECT_TRUE(run.terminal);
  EXPECT_GE(run.final_users, 55);
  EXPECT_LE(run.final_users, 99);
}

TEST(Sim, InvalidConfigNamesField) {
  SimConfig cfg = calibrate_default();
  cfg.error_onset = 1.2;
  EXPECT_FALSE(cfg.valid());
  try {
    cfg.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid);
    EXPECT_NE(std::string(e.what()).find("error_onset"), std::string::npos);
  }
  cfg = calibrate_default();
  cfg.base_demand(2) = 0;
  EXPECT_FALSE(cfg.valid());
  cfg = calibrate_default();
  cfg.noise_amplitude = 0.6;
  EXPECT_FALSE(cfg.valid());
}

TEST(Environment, StepErrorsCarryContext) {
  SimEnvironment env;
  try {
    execute_step(env, uniform_workload(11, 0), 4, 2, "baselines");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyWorkload);
    const std::string what = e.what();
    EXPECT_NE(what.find("baselines"), std::string::npos);
    EXPECT_NE(what.find("episode 5"), std::string::npos);
    EXPECT_NE(what.find("step 2"), std::string::npos);
  }
}
