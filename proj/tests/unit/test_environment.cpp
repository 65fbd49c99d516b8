#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "incfed/environment.hpp"
#include "incfed/error.hpp"

namespace incfed {
namespace {

EnvConfig small_config(std::uint64_t seed = 1) {
  EnvConfig cfg;
  cfg.n_clients = 4;
  cfg.horizon = 50;
  cfg.dim = 3;
  cfg.pool_size = 5;
  cfg.noise_sigma = 0.2;
  cfg.seed = seed;
  return cfg;
}

TEST(SyntheticEnv, SameSeedSameStream) {
  const auto a = Environment::synthetic(small_config(3));
  const auto b = Environment::synthetic(small_config(3));
  EXPECT_EQ(a.theta_star(), b.theta_star());
  for (std::size_t t = 1; t <= 10; ++t) {
    EXPECT_EQ(a.step(t).arms, b.step(t).arms);
    EXPECT_EQ(a.step(t).active_client, b.step(t).active_client);
    for (std::size_t k = 0; k < a.pool_size(); ++k) EXPECT_EQ(a.draw_reward(t, k), b.draw_reward(t, k));
  }
}

TEST(SyntheticEnv, DifferentSeedsDiffer) {
  const auto a = Environment::synthetic(small_config(3));
  const auto b = Environment::synthetic(small_config(4));
  EXPECT_NE(a.step(1).arms, b.step(1).arms);
}

TEST(SyntheticEnv, UnitNormsAndRanges) {
  const auto env = Environment::synthetic(small_config());
  EXPECT_NEAR(env.theta_star().norm(), 1.0, 1e-12);
  for (std::size_t t = 1; t <= env.horizon(); ++t) {
    const auto& obs = env.step(t);
    EXPECT_EQ(obs.step, t);
    EXPECT_LT(obs.active_client, env.n_clients());
    for (std::size_t k = 0; k < obs.pool_size(); ++k) EXPECT_LE(obs.arm(k).norm(), 1.0 + 1e-12);
  }
}

TEST(SyntheticEnv, SingleArmPool) {
  auto cfg = small_config();
  cfg.pool_size = 1;
  const auto env = Environment::synthetic(cfg);
  for (std::size_t t = 1; t <= env.horizon(); ++t) {
    EXPECT_EQ(env.step(t).pool_size(), 1u);
    EXPECT_EQ(env.best_expected(t), env.expected_reward(t, 0));
  }
}

TEST(SyntheticEnv, NoiselessRewardIsExpected) {
  auto cfg = small_config();
  cfg.noise_sigma = 0.0;
  const auto env = Environment::synthetic(cfg);
  for (std::size_t t = 1; t <= env.horizon(); ++t) {
    for (std::size_t k = 0; k < env.pool_size(); ++k) {
      EXPECT_EQ(env.draw_reward(t, k), env.step(t).arm(k).dot(env.theta_star()));
    }
  }
}

TEST(SyntheticEnv, ReplayableSteps) {
  const auto env = Environment::synthetic(small_config());
  const RoundObservation first = env.step(1);
  EXPECT_EQ(env.step(1).arms, first.arms);
  EXPECT_EQ(env.draw_reward(7, 2), env.draw_reward(7, 2));
}

TEST(SyntheticEnv, RangeErrors) {
  const auto env = Environment::synthetic(small_config());
  EXPECT_THROW(env.step(0), std::out_of_range);
  EXPECT_THROW(env.step(env.horizon() + 1), std::out_of_range);
  EXPECT_THROW(env.draw_reward(1, env.pool_size()), std::out_of_range);
}

TEST(SyntheticEnv, BestExpectedIsBruteForceMax) {
  auto cfg = small_config(17);
  cfg.dim = 2;
  cfg.pool_size = 3;
  const auto env = Environment::synthetic(cfg);
  for (std::size_t t = 1; t <= env.horizon(); ++t) {
    const auto& obs = env.step(t);
    double best = -2.0;
    for (Index k = 0; k < 3; ++k) {
      best = std::max(best, obs.arms(0, k) * env.theta_star()[0] + obs.arms(1, k) * env.theta_star()[1]);
    }
    EXPECT_NEAR(env.best_expected(t), best, 1e-15);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_GE(env.best_expected(t), env.expected_reward(t, k));
  }
}

TEST(SyntheticEnv, ConfigValidation) {
  auto cfg = small_config();
  cfg.n_clients = 0;
  EXPECT_THROW(Environment::synthetic(cfg), ConfigError);
  cfg = small_config();
  cfg.noise_sigma = -1;
  EXPECT_THROW(Environment::synthetic(cfg), ConfigError);
}

const char* kTinyDataset =
    "2 3 2 2\n"
    "1 1\n"
    "0.5 0.25 1\n"
    "-1 0 0\n"
    "2 2\n"
    "0 1 0.5\n"
    "1e-1 2.5E0 -3\n"
    "3 1\n"
    "1 1 1\n"
    "0 0 0\n";

TEST(DatasetEnv, ParsesFileFormat) {
  std::istringstream in(kTinyDataset);
  const auto env = Environment::parse_dataset(in);
  EXPECT_EQ(env.mode(), EnvMode::dataset);
  EXPECT_EQ(env.n_clients(), 2u);
  EXPECT_EQ(env.horizon(), 3u);
  EXPECT_EQ(env.dim(), 2u);
  EXPECT_EQ(env.pool_size(), 2u);
  EXPECT_EQ(env.step(2).active_client, 1u);
  EXPECT_EQ(env.step(2).arms(0, 1), 0.1);
  EXPECT_EQ(env.step(2).arms(1, 1), 2.5);
  EXPECT_EQ(env.draw_reward(2, 1), -3.0);
  EXPECT_EQ(env.draw_reward(1, 0), 1.0);
  // Boundary: the last logged round.
  EXPECT_EQ(env.step(3).arms(0, 0), 1.0);
  EXPECT_THROW(env.step(4), std::out_of_range);
  EXPECT_THROW(env.best_expected(1), UnsupportedMode);
  EXPECT_THROW(env.theta_star(), UnsupportedMode);
}

void expect_error_line(const std::string& text, std::size_t line) {
  std::istringstream in(text);
  try {
    Environment::parse_dataset(in);
    FAIL() << "expected DatasetError";
  } catch (const DatasetError& e) {
    EXPECT_EQ(e.line(), line) << e.what();
  }
}

TEST(DatasetEnv, RejectsMalformedInput) {
  expect_error_line("2 3 2\n", 1);                              // short header
  expect_error_line("2 1 2 1\n1 1\n0.5 0.5\n", 3);              // missing reward
  expect_error_line("2 1 2 1\n1 1\n0.5 0.5 1 9\n", 3);          // extra column
  expect_error_line("2 1 2 1\n1 3\n0.5 0.5 1\n", 2);            // client out of range
  expect_error_line("2 1 2 1\n2 1\n0.5 0.5 1\n", 2);            // wrong step
  expect_error_line("2 2 2 1\n1 1\n0.5 0.5 1\n", 4);            // truncated
  expect_error_line("2 1 2 1\n1 1\n0,5 0.5 1\n", 3);            // locale decimal comma
  expect_error_line("2 1 2 1\n1 1\n0.5 0.5 1\n1 1\n", 4);       // trailing data
}

TEST(DatasetEnv, SyntheticRoundTripsThroughFileFormat) {
  const auto synth = Environment::synthetic(small_config(21));
  std::stringstream buf;
  synth.save_dataset(buf);
  const auto replay = Environment::parse_dataset(buf);
  ASSERT_EQ(replay.horizon(), synth.horizon());
  for (std::size_t t = 1; t <= synth.horizon(); ++t) {
    EXPECT_EQ(replay.step(t).arms, synth.step(t).arms);
    EXPECT_EQ(replay.step(t).active_client, synth.step(t).active_client);
    for (std::size_t k = 0; k < synth.pool_size(); ++k) {
      EXPECT_EQ(replay.draw_reward(t, k), synth.draw_reward(t, k));
    }
  }
}

}  // namespace
}  // namespace incfed
