// Copyright 2026 The cmj Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "cmj/simulate.hpp"
#include "cmj/stats.hpp"
#include "cmj/volterra.hpp"
#include "test_models.hpp"

namespace {

using namespace cmj;

double max_rel_error(const MeanSolution& s, const MarkovMean& exact) {
  double e = 0.0;
  for (std::size_t i = 0; i < s.grid().size(); ++i) {
    const double v = exact(s.grid().time(i));
    e = std::max(e, std::fabs(s[i] - v) / v);
  }
  return e;
}

TEST(SolveMean, NoBirthsIsSurvival) {
  const auto m = fixtures::no_births();
  const auto s = solve_mean(m, TimeGrid::covering(1e-2, 2.0));
  for (std::size_t i = 0; i < s.grid().size(); ++i) EXPECT_EQ(s[i], m.lifetime.survival(s.grid().time(i)));
}

TEST(SolveMean, MarkovClosedFormAndRefinement) {
  const auto m = fixtures::markov(1.5, 1.0, 4.0);
  const auto exact = markov_mean(m);
  ASSERT_TRUE(exact.has_value());
  const auto fine = solve_mean(m, TimeGrid::covering(1e-3, 4.0));
  const auto coarse = solve_mean(m, TimeGrid::covering(2e-3, 4.0));
  const double ef = max_rel_error(fine, *exact), ec = max_rel_error(coarse, *exact);
  EXPECT_LE(ef, 1e-4);
  EXPECT_GE(ec / ef, 3.5);
  EXPECT_DOUBLE_EQ(fine[0], 1.0);
}

TEST(SolveMean, UngatedMarkovClosedForm) {
  const auto m = fixtures::markov(1.2, 0.7, 3.0, false);
  const auto exact = markov_mean(m);
  ASSERT_TRUE(exact.has_value());
  EXPECT_FALSE(exact->gated);
  EXPECT_LE(max_rel_error(solve_mean(m, TimeGrid::covering(1e-3, 3.0)), *exact), 1e-4);
}

TEST(SolveMean, OffspringAndScaleEnterThroughKappa) {
  auto m = fixtures::clt_model(2.0);
  const auto exact = markov_mean(m);
  ASSERT_TRUE(exact.has_value());
  EXPECT_DOUBLE_EQ(exact->kappa, 2.0);
  EXPECT_LE(max_rel_error(solve_mean(m, TimeGrid::covering(1e-3, 2.0)), *exact), 1e-4);
}

TEST(SolveMean, ResidualAtRoundoffLevel) {
  const double eps = std::numeric_limits<double>::epsilon();
  for (const auto& m : {fixtures::markov(1.5, 1.0, 4.0), fixtures::clt_model(), fixtures::subcritical()}) {
    const auto s = solve_mean(m, TimeGrid::covering(1e-3, m.horizon));
    EXPECT_LE(s.max_relative_residual(), 10 * eps);
    EXPECT_EQ(s.mean_convolution(0), 0.0);
  }
}

TEST(SolveMean, MonotoneInBirthRate) {
  const TimeGrid g = TimeGrid::covering(1e-3, 2.0);
  const auto lo = solve_mean(fixtures::markov(1.0), g);
  const auto hi = solve_mean(fixtures::markov(1.5), g);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(hi[i], lo[i]);
}

ModelSpec weibull_decay(bool gated) {
  ModelSpec m;
  m.lifetime = LifetimeSpec(WeibullLifetime{1.2, 1.5});
  m.birthrate.shape = RateShape(ExpDecayRate{2.0, 0.5});
  m.birthrate.gated = gated;
  m.offspring = OffspringSpec(ShiftedPoissonOffspring{0.3});
  m.horizon = 2.0;
  return m;
}

TEST(SolveMean, MatchesSimulatedTrees) {
  const TimeGrid coarse(0.5, 5);
  int seed = 0;
  for (const auto& m : {fixtures::clt_model(), weibull_decay(true), weibull_decay(false)}) {
    const auto s = solve_mean(m, TimeGrid::covering(1e-3, 2.0));
    const auto t = moments_Z(m, coarse, 100000, StreamKey::root(100 + seed++), kDefaultIndividualCap, 2);
    for (std::size_t i = 1; i < coarse.size(); ++i) {
      const stats::Estimate e{t.m1[i], t.se1[i]};
      EXPECT_LT(std::fabs(e.z(s.at(coarse.time(i)))), 4.0) << seed << " t " << coarse.time(i);
    }
  }
}

TEST(SolveMean, RejectsLargeStepAndOffGridKinks) {
  EXPECT_THROW(solve_mean(fixtures::markov(10.0), TimeGrid(0.2, 11)), ConfigError);
  ModelSpec m = fixtures::markov();
  m.lifetime = LifetimeSpec(UniformLifetime{0.3, 1.7});
  EXPECT_THROW(solve_mean(m, TimeGrid(0.25, 9)), ConfigError);
  EXPECT_NO_THROW(solve_mean(m, TimeGrid(0.1, 21)));
  EXPECT_THROW(solve_mean(fixtures::markov(), TimeGrid(0.1, 31)), ConfigError);
}

TEST(PathConvolver, ZeroPathGivesZero) {
  const auto m = fixtures::markov();
  const auto s = solve_mean(m, TimeGrid::covering(1e-2, 2.0));
  IndividualDraw d;
  d.scale = 0.0;
  EXPECT_EQ(convolve_with_path(s, m.birthrate, d, 150), 0.0);
  d.scale = 1.0;
  d.gate = 0.0;
  EXPECT_EQ(convolve_with_path(s, m.birthrate, d, 150), 0.0);
  EXPECT_EQ(convolve_with_path(s, m.birthrate, IndividualDraw{}, 0), 0.0);
}

TEST(PathConvolver, UnitPathIsTrapezoidOfMean) {
  const auto m = fixtures::markov(1.0, 1.0, 2.0, false);
  const auto s = solve_mean(m, TimeGrid::covering(1e-2, 2.0));
  const std::size_t node = 137;
  IndividualDraw d;
  double trap = 0.0;
  for (std::size_t k = 0; k <= node; ++k) trap += (k == 0 || k == node ? 0.5 : 1.0) * s.step() * s[k];
  EXPECT_NEAR(convolve_with_path(s, m.birthrate, d, node), trap, 1e-12);
  d.scale = 2.5;
  EXPECT_NEAR(convolve_with_path(s, m.birthrate, d, node), 2.5 * trap, 1e-12);
}

TEST(PathConvolver, GateBeyondNodeMatchesUngated) {
  const auto m = fixtures::clt_model();
  const auto s = solve_mean(m, TimeGrid::covering(1e-2, 2.0));
  const PathConvolver conv(s, m.birthrate, 120);
  IndividualDraw open, late;
  late.gate = 1.25;
  EXPECT_EQ(conv(open), conv(late));
  IndividualDraw early;
  early.gate = 0.6;
  EXPECT_LT(conv(early), conv(open));
  EXPECT_THROW(PathConvolver(s, m.birthrate, s.grid().size()), ConfigError);
}

TEST(CovU2, TrivialCasesAndSymmetry) {
  const auto det = fixtures::markov(1.0, 1.0, 2.0, false);
  const auto sd = solve_mean(det, TimeGrid::covering(1e-2, 2.0));
  EXPECT_EQ(double_integral_covU2(sd, det, 100, 150), 0.0);
  const auto m = fixtures::clt_model();
  const auto s = solve_mean(m, TimeGrid::covering(1e-2, 2.0));
  EXPECT_EQ(double_integral_covU2(s, m, 0, 150), 0.0);
  EXPECT_EQ(double_integral_covU2(s, m, 70, 150), double_integral_covU2(s, m, 150, 70));
  EXPECT_GT(double_integral_covU2(s, m, 150, 150), 0.0);
}

}  // namespace
