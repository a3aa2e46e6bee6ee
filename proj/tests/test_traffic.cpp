/*
 * Copyright 2026 The closudn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "closudn/traffic.hpp"

namespace closudn {
namespace {

constexpr int kN = 4;
constexpr int kK = 4;
constexpr int kPorts = kN * kK;

std::vector<double> per_input_rate(const TrafficModel& model, int slots, std::uint64_t seed) {
  Rng rng(seed);
  TrafficGenerator gen(model, kN, kK, rng);
  std::vector<double> count(kPorts, 0.0);
  std::vector<Arrival> arr;
  for (int t = 0; t < slots; ++t) {
    gen.generate_slot(rng, arr);
    for (const auto& a : arr) count[a.src.global] += 1.0;
  }
  for (auto& c : count) c /= slots;
  return count;
}

TEST(BurstProbabilities, TwoStateChain) {
  EXPECT_DOUBLE_EQ(burst_end_probability(10.0), 0.1);
  // pi_on = p_on / (p_on + p_off) must equal rho.
  for (double rho : {0.1, 0.3, 0.5, 0.8}) {
    const double on = burst_start_probability(rho, 10.0);
    const double off = burst_end_probability(10.0);
    EXPECT_NEAR(on / (on + off), rho, 1e-12);
  }
  EXPECT_DOUBLE_EQ(burst_start_probability(0.5, 10.0), 0.1);
}

TEST(BurstProbabilities, GaplessKeepsMeanIdle) {
  // Idle gaps geometric on {0, 1, ...}: mean (1 - p) / p = B (1 - rho) / rho.
  for (double rho : {0.1, 0.5, 0.9, 0.99}) {
    const double p = burst_start_probability_gapless(rho, 10.0);
    EXPECT_GT(p, 0.0);
    EXPECT_LE(p, 1.0);
    EXPECT_NEAR((1.0 - p) / p, 10.0 * (1.0 - rho) / rho, 1e-9);
  }
  EXPECT_DOUBLE_EQ(burst_start_probability_gapless(0.5, 10.0), 1.0 / 11.0);
}

TEST(TrafficModel, RejectsSaturatedBursty) {
  EXPECT_THROW(validate(TrafficModel{TrafficKind::bursty_uniform, 1.0, 0.0, 10.0}), ConfigError);
  EXPECT_THROW(validate(TrafficModel{TrafficKind::bernoulli_uniform, 1.5, 0.0, 10.0}), ConfigError);
  EXPECT_NO_THROW(validate(TrafficModel{TrafficKind::bernoulli_uniform, 1.0, 0.0, 10.0}));
}

TEST(TrafficModel, HotSpotIsHalfUnbalanced) {
  const TrafficModel h = TrafficModel::hot_spot(0.7);
  EXPECT_EQ(h.kind, TrafficKind::unbalanced);
  EXPECT_DOUBLE_EQ(h.omega, 0.5);
  EXPECT_DOUBLE_EQ(h.load, 0.7);
}

TEST(TrafficGenerator, PerInputRateMatchesLoad) {
  const std::vector<TrafficModel> models = {
      {TrafficKind::bernoulli_uniform, 0.3, 0.0, 10.0},
      {TrafficKind::unbalanced, 0.8, 0.5, 10.0},
      {TrafficKind::diagonal, 0.6, 0.0, 10.0},
      {TrafficKind::bursty_uniform, 0.5, 0.0, 10.0},
  };
  for (const auto& m : models) {
    const auto rates = per_input_rate(m, 100000, 7);
    for (double r : rates) EXPECT_NEAR(r, m.load, 0.01) << to_string(m.kind);
  }
}

TEST(TrafficGenerator, BurstyOnFraction) {
  // 16 inputs x 62500 slots = 1e6 input-slots.
  const auto rates = per_input_rate({TrafficKind::bursty_uniform, 0.5, 0.0, 10.0}, 62500, 11);
  double mean = 0.0;
  for (double r : rates) mean += r / kPorts;
  EXPECT_NEAR(mean, 0.5, 0.01);
}

TEST(TrafficGenerator, BurstsTargetOneDestination) {
  Rng rng(3);
  TrafficGenerator gen({TrafficKind::bursty_uniform, 0.6, 0.0, 10.0}, kN, kK, rng);
  std::vector<Arrival> arr;
  // Runs of equal destination per input; adjacent bursts share a destination
  // with probability 1/N, which biases the mean by well under 5%.
  std::vector<int> run(kPorts, 0), last(kPorts, -1);
  std::vector<bool> active(kPorts, false);
  double bursts = 0.0, packets = 0.0;
  for (int t = 0; t < 100000; ++t) {
    gen.generate_slot(rng, arr);
    std::vector<bool> fired(kPorts, false);
    for (const auto& a : arr) {
      const int s = a.src.global;
      fired[s] = true;
      if (gen.burst_state(s).on) {
        EXPECT_EQ(a.dst, gen.burst_state(s).current_dst);
      }
      if (!active[s] || last[s] != a.dst.global) bursts += 1.0;
      packets += 1.0;
      active[s] = true;
      last[s] = a.dst.global;
    }
    for (int s = 0; s < kPorts; ++s) {
      if (!fired[s]) active[s] = false;
    }
  }
  const double mean_burst = packets / bursts;
  EXPECT_NEAR(mean_burst, 10.0, 0.5);
}

TEST(TrafficGenerator, UnbalancedExtremes) {
  Rng rng(5);
  TrafficGenerator diag({TrafficKind::unbalanced, 1.0, 1.0, 10.0}, kN, kK, rng);
  for (int t = 0; t < 1000; ++t) {
    for (const auto& a : diag.generate_slot(rng)) EXPECT_EQ(a.src.global, a.dst.global);
  }

  // omega = 0: destination histogram uniform (chi-square, 15 dof, 99.9% point 37.7).
  TrafficGenerator uni({TrafficKind::unbalanced, 1.0, 0.0, 10.0}, kN, kK, rng);
  std::vector<double> hist(kPorts, 0.0);
  double total = 0.0;
  for (int t = 0; t < 20000; ++t) {
    for (const auto& a : uni.generate_slot(rng)) {
      if (a.src.global == 0) {
        hist[a.dst.global] += 1.0;
        total += 1.0;
      }
    }
  }
  double chi2 = 0.0;
  for (double h : hist) chi2 += (h - total / kPorts) * (h - total / kPorts) / (total / kPorts);
  EXPECT_LT(chi2, 37.7);
}

TEST(TrafficGenerator, HotSpotDiagonalShare) {
  // P(dst = src) = omega + (1 - omega) / N.
  Rng rng(9);
  TrafficGenerator gen({TrafficKind::unbalanced, 1.0, 0.5, 10.0}, kN, kK, rng);
  double same = 0.0, total = 0.0;
  for (int t = 0; t < 50000; ++t) {
    for (const auto& a : gen.generate_slot(rng)) {
      same += a.src.global == a.dst.global;
      total += 1.0;
    }
  }
  EXPECT_NEAR(same / total, 0.5 + 0.5 / kPorts, 0.005);
}

TEST(TrafficGenerator, Deterministic) {
  for (auto kind : {TrafficKind::bernoulli_uniform, TrafficKind::bursty_uniform, TrafficKind::unbalanced}) {
    const TrafficModel m{kind, 0.7, 0.3, 10.0};
    Rng a(42), b(42);
    TrafficGenerator ga(m, kN, kK, a), gb(m, kN, kK, b);
    for (int t = 0; t < 500; ++t) {
      const auto x = ga.generate_slot(a);
      const auto y = gb.generate_slot(b);
      ASSERT_EQ(x.size(), y.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_EQ(x[i].src, y[i].src);
        EXPECT_EQ(x[i].dst, y[i].dst);
      }
    }
  }
}

TEST(TrafficGenerator, AtMostOnePerInput) {
  Rng rng(1);
  TrafficGenerator gen({TrafficKind::bernoulli_uniform, 1.0, 0.0, 10.0}, kN, kK, rng);
  const auto arr = gen.generate_slot(rng);
  ASSERT_EQ(arr.size(), static_cast<std::size_t>(kPorts));
  for (int s = 0; s < kPorts; ++s) EXPECT_EQ(arr[s].src.global, s);
}

}  // namespace
}  // namespace closudn
