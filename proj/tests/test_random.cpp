// Copyright 2026 The cmj Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cmj/random.hpp"
#include "cmj/stats.hpp"

namespace {

using cmj::Philox4x32;
using cmj::RandomStream;
using cmj::StreamKey;

// Known-answer vectors of the Random123 reference implementation.
TEST(Philox, KnownAnswerZero) {
  const auto out = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out, (Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
  const auto out = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out, (Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(DeriveStream, SameLabelsSameOutput) {
  auto a = cmj::derive_stream(42, {1, 2, 3});
  auto b = cmj::derive_stream(42, {1, 2, 3});
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u32(), b.next_u32());
}

TEST(DeriveStream, SpanAndListAgree) {
  const std::vector<std::uint64_t> labels = {7, 0, 9};
  auto a = cmj::derive_stream(5, labels);
  auto b = cmj::derive_stream(5, {7, 0, 9});
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(DeriveStream, DistinctLabelsUncorrelated) {
  const int n = 10000;
  const std::vector<std::vector<std::uint64_t>> paths = {{0}, {1}, {0, 0}, {0, 1}, {1, 0}, {2, 5, 7}};
  std::vector<std::vector<double>> u;
  for (const auto& p : paths) {
    auto s = cmj::derive_stream(2026, p);
    std::vector<double> v(n);
    for (auto& x : v) x = s.uniform();
    u.push_back(std::move(v));
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    for (std::size_t j = i + 1; j < u.size(); ++j) {
      EXPECT_LT(std::fabs(cmj::stats::correlation(u[i], u[j]).value), 0.04) << i << "," << j;
      std::size_t same = 0;
      for (int k = 0; k < n; ++k) same += u[i][k] == u[j][k];
      EXPECT_EQ(same, 0u);
    }
  }
}

// 10^4 draws give correlation SE 0.01; for a pool of independent pairs the
// mean absolute correlation must sit well below it.
TEST(DeriveStream, MeanAbsoluteCorrelationBelowOnePercent) {
  const int n = 10000, streams = 20;
  std::vector<std::vector<double>> u;
  for (int k = 0; k < streams; ++k) {
    auto s = cmj::derive_stream(99, {static_cast<std::uint64_t>(k)});
    std::vector<double> v(n);
    for (auto& x : v) x = s.uniform();
    u.push_back(std::move(v));
  }
  double total = 0.0;
  int pairs = 0;
  for (int i = 0; i < streams; ++i) {
    for (int j = i + 1; j < streams; ++j, ++pairs) total += std::fabs(cmj::stats::correlation(u[i], u[j]).value);
  }
  EXPECT_LT(total / pairs, 0.01);
}

TEST(DeriveStream, OrderSensitive) {
  auto a = cmj::derive_stream(1, {1, 2});
  auto b = cmj::derive_stream(1, {2, 1});
  EXPECT_NE(a.next_u64(), b.next_u64());
  EXPECT_NE(StreamKey::root(1).child({1, 2}), StreamKey::root(1).child({2, 1}));
  EXPECT_NE(StreamKey::root(1).child(0), StreamKey::root(1));
  EXPECT_NE(StreamKey::root(1), StreamKey::root(2));
}

TEST(RandomStream, UniformRanges) {
  RandomStream r(StreamKey::root(3));
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform(), p = r.uniform_pos(), o = r.uniform_open();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_GT(p, 0.0);
    ASSERT_LE(p, 1.0);
    ASSERT_GT(o, 0.0);
    ASSERT_LT(o, 1.0);
  }
}

// Sample mean and variance against the exact values, 4 SE.
template <class Draw>
void check_moments(Draw&& draw, double mean, double var, int n = 200000) {
  std::vector<double> v(n);
  for (auto& x : v) x = draw();
  const auto m = cmj::stats::mean_se(v);
  EXPECT_LT(std::fabs(m.z(mean)), 4.0) << "mean " << m.value << " vs " << mean;
  const auto c = cmj::stats::covariance(v, v);
  EXPECT_LT(std::fabs(c.z(var)), 4.0) << "var " << c.value << " vs " << var;
}

TEST(RandomStream, ExponentialMoments) {
  RandomStream r(StreamKey::root(4));
  check_moments([&] { return r.exponential(2.0); }, 0.5, 0.25);
}

TEST(RandomStream, NormalMoments) {
  RandomStream r(StreamKey::root(5));
  check_moments([&] { return r.normal(); }, 0.0, 1.0);
}

TEST(RandomStream, GammaMoments) {
  RandomStream r(StreamKey::root(6));
  check_moments([&] { return r.gamma(2.5); }, 2.5, 2.5);
  check_moments([&] { return r.gamma(0.4); }, 0.4, 0.4);
}

TEST(RandomStream, PoissonMoments) {
  RandomStream r(StreamKey::root(7));
  check_moments([&] { return static_cast<double>(r.poisson(3.0)); }, 3.0, 3.0);
  check_moments([&] { return static_cast<double>(r.poisson(75.0)); }, 75.0, 75.0);
  EXPECT_EQ(r.poisson(0.0), 0u);
}

TEST(RandomStream, DiscreteFrequencies) {
  RandomStream r(StreamKey::root(8));
  const std::vector<double> p = {0.2, 0.5, 0.3};
  std::vector<int> count(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++count[r.discrete(p)];
  for (int k = 0; k < 3; ++k) {
    const double se = std::sqrt(p[k] * (1 - p[k]) / n);
    EXPECT_LT(std::fabs(count[k] / double(n) - p[k]), 4 * se);
  }
}

}  // namespace
