#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "oracles.hpp"
#include "tvlap/noise.hpp"
#include "tvlap/simgen.hpp"

using namespace tvlap;

TEST(GaussianSource, FirstDrawsAreFrozen) {
  // Pins the documented recipe: mt19937_64, 53-bit uniform, Box-Muller.
  std::mt19937_64 engine(1);
  const double u1 = static_cast<double>(engine() >> 11) * 0x1.0p-53;
  const double u2 = static_cast<double>(engine() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  GaussianSource g(1);
  EXPECT_EQ(g.standard_normal(), r * std::cos(2.0 * std::numbers::pi * u2));
  EXPECT_EQ(g.standard_normal(), r * std::sin(2.0 * std::numbers::pi * u2));
}

TEST(GaussianSource, MomentsAndRange) {
  GaussianSource g(5);
  std::vector<double> z;
  for (int i = 0; i < 20000; ++i) z.push_back(g.standard_normal());
  EXPECT_NEAR(oracle::mean(z), 0.0, 0.03);
  EXPECT_NEAR(oracle::variance(z), 1.0, 0.04);
  for (int i = 0; i < 1000; ++i) {
    const long v = g.uniform_int(3, 8);
    EXPECT_GE(v, 3);
    EXPECT_LE(v, 8);
  }
}

TEST(GenSine, GridAndTruth) {
  const Scenario s = gen_sine(1);
  ASSERT_EQ(s.size(), 1201u);
  EXPECT_EQ(s.x.size(), 1201u);
  EXPECT_EQ(s.t.front(), 0.0);
  EXPECT_DOUBLE_EQ(s.t.back(), 120.0);
  EXPECT_EQ(s.truth[0], 0.0);
  EXPECT_EQ(s.truth_d1[0], 0.5);
  std::size_t arg = 0;
  for (std::size_t i = 0; i < 400; ++i) {
    if (s.truth[i] > s.truth[arg]) arg = i;
  }
  EXPECT_NEAR(s.t[arg], 5 * std::numbers::pi, 0.05);
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_GT(s.t[i], s.t[i - 1]);
}

TEST(GenSine, UnitNoise) {
  const Scenario s = gen_sine(2);
  std::vector<double> e;
  for (std::size_t i = 0; i < s.size(); ++i) e.push_back(s.x[i] - s.truth[i]);
  EXPECT_NEAR(oracle::variance(e), 1.0, 0.12);
}

TEST(GenSineExp, Truth) {
  const Scenario s = gen_sine_exp(1);
  EXPECT_EQ(s.truth[0], 1.0);
  EXPECT_NEAR(s.truth.back(), 5 * std::sin(12.0) + std::exp(3.6), 1e-12);
  EXPECT_NEAR(s.truth.back(), 33.92, 0.01);
  EXPECT_DOUBLE_EQ(s.truth_d1[0], 0.5 + 0.03);
}

TEST(Generators, DerivativeMatchesCenteredDifference) {
  for (const Scenario& s : {gen_sine(1), gen_sine_exp(1)}) {
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      const double fd = (s.truth[i + 1] - s.truth[i - 1]) / (s.t[i + 1] - s.t[i - 1]);
      EXPECT_NEAR(fd, s.truth_d1[i], 1e-3) << s.name << " " << i;
    }
  }
  for (const Scenario& s : gen_fault_channels(1, 0, 0.0)) {
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      const double fd = (s.truth[i + 1] - s.truth[i - 1]) / (s.t[i + 1] - s.t[i - 1]);
      EXPECT_NEAR(fd, s.truth_d1[i], 1e-3);
    }
  }
}

TEST(Generators, SeedReproducible) {
  EXPECT_EQ(gen_sine(9).x, gen_sine(9).x);
  EXPECT_NE(gen_sine(9).x, gen_sine(10).x);
  EXPECT_EQ(gen_fault_channels(3, 5, 5.0)[2].x, gen_fault_channels(3, 5, 5.0)[2].x);
  const ArmaSpec spec({-0.5}, {1.0});
  EXPECT_EQ(gen_arma_noise(spec, 1.0, 100, 4), gen_arma_noise(spec, 1.0, 100, 4));
}

TEST(GenFaultChannels, JumpsOnlyOnChannelThree) {
  const auto clean = gen_fault_channels(21, 0, 5.0);
  const auto faulty = gen_fault_channels(21, 5, 5.0);
  ASSERT_EQ(faulty.size(), 3u);
  EXPECT_EQ(clean[0].x, faulty[0].x);
  EXPECT_EQ(clean[1].x, faulty[1].x);
  std::vector<int> run_lengths;
  int run = 0;
  std::size_t first = faulty[2].size();
  for (std::size_t i = 0; i < faulty[2].size(); ++i) {
    const double d = faulty[2].x[i] - clean[2].x[i];
    if (std::abs(d) > 1e-9) {
      EXPECT_NEAR(std::abs(d), 5.0, 1e-9);
      first = std::min(first, i);
      ++run;
    } else if (run) {
      run_lengths.push_back(run);
      run = 0;
    }
  }
  if (run) run_lengths.push_back(run);
  EXPECT_EQ(run_lengths.size(), 5u);
  for (int len : run_lengths) {
    EXPECT_GE(len, 3);
    EXPECT_LE(len, 8);
  }
  EXPECT_GE(first, 60u);
}

TEST(GenArmaNoise, WhiteVariance) {
  const auto v = gen_arma_noise(ArmaSpec::white(2.0), 0.5, 10000, 1);
  ASSERT_EQ(v.size(), 10000u);
  EXPECT_NEAR(oracle::variance(v), 4.0 * 0.5, 0.1 * 2.0);
}

TEST(GenArmaNoise, ArOneVariance) {
  const auto v = gen_arma_noise(ArmaSpec({-0.5}, {1.0}), 1.0, 10000, 2);
  EXPECT_NEAR(oracle::variance(v), 4.0 / 3.0, 0.1 * 4.0 / 3.0);
}

TEST(GenArmaNoise, ParsevalConsistency) {
  const ArmaSpec spec({-1.1, 0.3}, {1.0, 0.5, -0.2});
  const double r = 2.0;
  const double rbar = innovation_variance(r, spec);
  const auto v = gen_arma_noise(spec, rbar, 50000, 3);
  EXPECT_NEAR(oracle::variance(v), r, 0.1 * r);
}

TEST(GenArmaNoise, Errors) {
  EXPECT_THROW(gen_arma_noise(ArmaSpec::white(), 1.0, 0, 1), std::invalid_argument);
  EXPECT_THROW(gen_arma_noise(ArmaSpec::white(), -1.0, 10, 1), std::invalid_argument);
}
