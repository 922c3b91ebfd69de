// Copyright 2026 The cmj Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "cmj/model.hpp"
#include "cmj/random.hpp"
#include "cmj/stats.hpp"
#include "test_models.hpp"

namespace {

using namespace cmj;

ModelSpec with_rate(RateShape shape, ScaleLaw scale, bool gated, LifetimeSpec life = LifetimeSpec(ExponentialLifetime{1.0})) {
  ModelSpec m;
  m.lifetime = std::move(life);
  m.birthrate.shape = std::move(shape);
  m.birthrate.scale = std::move(scale);
  m.birthrate.gated = gated;
  m.horizon = 3.0;
  return m;
}

TEST(SampleIndividual, ZeroRatePathVanishes) {
  const auto m = fixtures::markov(0.0);
  RandomStream rng(StreamKey::root(1));
  const auto d = sample_individual(m, rng);
  EXPECT_EQ(d.b_max, 0.0);
  for (double s : {0.0, 0.5, 1.0, 1.9}) EXPECT_EQ(d.rate(m.birthrate, s), 0.0);
}

TEST(SampleIndividual, GatingCutsThePathAtDeath) {
  const auto m = fixtures::markov(1.5, 1.0, 4.0);
  IndividualDraw d;
  d.eta = 2.0;
  d.scale = 1.0;
  d.b_max = 1.5;
  d.gate = 2.0;
  EXPECT_DOUBLE_EQ(d.rate(m.birthrate, 1.0), 1.5);
  EXPECT_EQ(d.rate(m.birthrate, 3.0), 0.0);
  RandomStream rng(StreamKey::root(2));
  for (int i = 0; i < 1000; ++i) {
    const auto s = sample_individual(m, rng);
    ASSERT_GT(s.eta, 0.0);
    ASSERT_EQ(s.gate, s.eta);
    ASSERT_DOUBLE_EQ(s.b_max, 1.5);
  }
}

TEST(SampleIndividual, ExpDecayClosedForm) {
  const auto m = with_rate(RateShape(ExpDecayRate{2.0, 1.0}), ScaleLaw(DiscreteScale{{0.5}, {1.0}}), false);
  RandomStream rng(StreamKey::root(3));
  const auto d = sample_individual(m, rng);
  EXPECT_DOUBLE_EQ(d.scale, 0.5);
  EXPECT_NEAR(d.rate(m.birthrate, 1.0), 0.3679, 5e-5);
  EXPECT_NEAR(d.rate(m.birthrate, 1.0), std::exp(-1.0), 1e-15);
}

TEST(SampleIndividual, BoundDominatesPath) {
  const auto m = with_rate(RateShape(PiecewiseConstantRate{{0.5, 1.5}, {1.0, 3.0, 0.5}}), ScaleLaw(GammaScale{2.0, 0.5}),
                           true);
  RandomStream rng(StreamKey::root(4));
  for (int i = 0; i < 200; ++i) {
    const auto d = sample_individual(m, rng);
    for (int k = 0; k <= 30; ++k) ASSERT_LE(d.rate(m.birthrate, 0.1 * k), d.b_max);
  }
}

TEST(RateShape, PiecewiseIsRightContinuousWithLeftLimits) {
  const RateShape r(PiecewiseConstantRate{{1.0, 2.0}, {1.0, 3.0, 0.5}});
  EXPECT_EQ(r.value(0.5), 1.0);
  EXPECT_EQ(r.value(1.0), 3.0);
  EXPECT_EQ(r.value_left(1.0), 1.0);
  EXPECT_EQ(r.value(2.0), 0.5);
  EXPECT_EQ(r.value_left(2.0), 3.0);
  EXPECT_EQ(r.sup(1.5), 3.0);
  EXPECT_EQ(r.sup(0.9), 1.0);
}

TEST(MeanBirthRate, Examples) {
  const auto ungated = with_rate(RateShape(ConstantRate{2.0}), ScaleLaw{}, false);
  for (double s : {0.0, 1.0, 2.5}) EXPECT_EQ(mean_birth_rate(ungated, s), 2.0);
  const auto gated = fixtures::markov(1.5, 1.0, 3.0);
  for (double s : {0.0, 0.7, 2.0}) EXPECT_NEAR(mean_birth_rate(gated, s), 1.5 * std::exp(-s), 1e-15);
  const auto clt = fixtures::clt_model();
  for (double s : {0.0, 0.5, 2.0}) EXPECT_NEAR(mean_birth_rate(clt, s), std::exp(-s), 1e-15);
}

TEST(MeanBirthRate, DomainErrors) {
  const auto m = fixtures::markov();
  EXPECT_THROW((void)mean_birth_rate(m, -0.1), DomainError);
  EXPECT_THROW((void)mean_birth_rate(m, 2.5), DomainError);
  EXPECT_THROW((void)cov_birth_rate(m, 0.0, 3.0), DomainError);
  EXPECT_THROW((void)cov_birth_lifetime(m, 3.0, 0.0), DomainError);
}

TEST(CovBirthRate, Examples) {
  const auto det = with_rate(RateShape(ExpDecayRate{1.0, 0.5}), ScaleLaw{}, false);
  EXPECT_EQ(cov_birth_rate(det, 0.3, 1.2), 0.0);
  const auto g = fixtures::markov(1.0, 1.0, 3.0);
  EXPECT_NEAR(cov_birth_rate(g, 1.0, 1.0), std::exp(-1.0) - std::exp(-2.0), 1e-15);
  EXPECT_NEAR(cov_birth_rate(g, 1.0, 1.0), 0.2325, 5e-5);
}

TEST(CovBirthLifetime, Examples) {
  const auto ungated = with_rate(RateShape(ConstantRate{1.0}), ScaleLaw(GammaScale{2.0, 1.0}), false);
  EXPECT_EQ(cov_birth_lifetime(ungated, 0.5, 1.0), 0.0);
  const auto g = fixtures::markov(1.0, 1.0, 3.0);
  EXPECT_NEAR(cov_birth_lifetime(g, 0.5, 1.0), std::exp(-1.0) - std::exp(-0.5) * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(cov_birth_lifetime(g, 0.5, 1.0), 0.1447, 5e-5);
}

TEST(CovBirthRate, SymmetricAndPositiveSemidefinite) {
  const std::vector<ModelSpec> models = {
      fixtures::clt_model(3.0),
      with_rate(RateShape(ExpDecayRate{2.0, 0.7}), ScaleLaw(GammaScale{3.0, 0.4}), true,
                LifetimeSpec(WeibullLifetime{1.5, 0.6})),
      with_rate(RateShape(PiecewiseConstantRate{{1.0}, {2.0, 0.5}}), ScaleLaw(DiscreteScale{{0.0, 2.0}, {0.3, 0.7}}),
                false),
      with_rate(RateShape(ConstantRate{1.0}), ScaleLaw(GammaScale{1.0, 1.0}), true,
                LifetimeSpec(UniformLifetime{0.5, 2.5}))};
  for (const auto& m : models) {
    Eigen::MatrixXd c(10, 10);
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 10; ++j) {
        c(i, j) = cov_birth_rate(m, 0.3 * i, 0.3 * j);
        EXPECT_EQ(c(i, j), cov_birth_rate(m, 0.3 * j, 0.3 * i));
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c, Eigen::EigenvaluesOnly);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
  }
}

// Monte-Carlo oracles: sampled paths against the closed forms, 10^6 draws.
struct PathSample {
  std::vector<double> b_r, b_u, alive_t;
};

PathSample sample_paths(const ModelSpec& m, double r, double u, double t, int n, std::uint64_t seed) {
  PathSample p;
  p.b_r.resize(n), p.b_u.resize(n), p.alive_t.resize(n);
  for (int k = 0; k < n; ++k) {
    RandomStream rng(StreamKey::root(seed).child(k));
    const auto d = sample_individual(m, rng);
    p.b_r[k] = d.rate(m.birthrate, r);
    p.b_u[k] = d.rate(m.birthrate, u);
    p.alive_t[k] = d.eta > t ? 1.0 : 0.0;
  }
  return p;
}

class MomentOracle : public ::testing::TestWithParam<int> {};

ModelSpec oracle_model(int which) {
  switch (which) {
    case 0: return fixtures::clt_model(3.0);
    case 1:
      return with_rate(RateShape(ExpDecayRate{2.0, 0.7}), ScaleLaw(GammaScale{3.0, 0.4}), true,
                       LifetimeSpec(WeibullLifetime{1.5, 0.6}));
    case 2:
      return with_rate(RateShape(PiecewiseConstantRate{{1.0}, {2.0, 0.5}}),
                       ScaleLaw(DiscreteScale{{0.0, 2.0}, {0.3, 0.7}}), false);
    default:
      return with_rate(RateShape(ConstantRate{1.0}), ScaleLaw(GammaScale{1.0, 1.0}), true,
                       LifetimeSpec(UniformLifetime{0.5, 2.5}));
  }
}

TEST_P(MomentOracle, MeanAndCovariancesMatchSampledPaths) {
  const auto m = oracle_model(GetParam());
  const double r = 0.8, u = 1.3, t = 1.1;
  const auto p = sample_paths(m, r, u, t, 1000000, 100 + GetParam());
  EXPECT_LT(std::fabs(stats::mean_se(p.b_r).z(mean_birth_rate(m, r))), 4.0);
  EXPECT_LT(std::fabs(stats::mean_se(p.b_u).z(mean_birth_rate(m, u))), 4.0);
  EXPECT_LT(std::fabs(stats::covariance(p.b_r, p.b_u).z(cov_birth_rate(m, r, u))), 4.0);
  EXPECT_LT(std::fabs(stats::covariance(p.b_r, p.alive_t).z(cov_birth_lifetime(m, r, t))), 4.0);
  EXPECT_LT(std::fabs(stats::covariance(p.b_u, p.alive_t).z(cov_birth_lifetime(m, u, t))), 4.0);
}

INSTANTIATE_TEST_SUITE_P(Families, MomentOracle, ::testing::Values(0, 1, 2, 3));

TEST(OffspringMoments, Examples) {
  const auto d = OffspringSpec(DeterministicOffspring{1}).moments();
  EXPECT_EQ(d.mean, 1.0);
  EXPECT_EQ(d.second, 1.0);
  EXPECT_EQ(d.fourth, 1.0);
  EXPECT_EQ(d.factorial2, 0.0);
  const auto t = OffspringSpec(TwoPointOffspring{1, 3, 0.5}).moments();
  EXPECT_DOUBLE_EQ(t.mean, 2.0);
  EXPECT_DOUBLE_EQ(t.second, 5.0);
  EXPECT_DOUBLE_EQ(t.fourth, 41.0);
  EXPECT_DOUBLE_EQ(t.factorial2, 3.0);
  const auto p = OffspringSpec(ShiftedPoissonOffspring{1.0}).moments();
  EXPECT_DOUBLE_EQ(p.mean, 2.0);
  // E[(1+P)^2] = 1 + 2 + 2 = 5 and E[(1+P)^4] = 1 + 4 + 12 + 20 + 15 = 52 for P ~ Poisson(1).
  EXPECT_DOUBLE_EQ(p.second, 5.0);
  EXPECT_DOUBLE_EQ(p.fourth, 52.0);
}

TEST(OffspringMoments, JensenAndSampling) {
  const std::vector<OffspringSpec> specs = {OffspringSpec(DeterministicOffspring{2}),
                                            OffspringSpec(TwoPointOffspring{1, 4, 0.3}),
                                            OffspringSpec(ShiftedPoissonOffspring{2.5})};
  for (const auto& s : specs) {
    const auto m = s.moments();
    EXPECT_GE(m.second, m.mean * m.mean);
    EXPECT_GE(m.fourth, m.second * m.second);
    RandomStream rng(StreamKey::root(77));
    std::vector<double> v(200000), v2(200000);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto l = s.sample(rng);
      ASSERT_GE(l, 1u);
      v[i] = static_cast<double>(l);
      v2[i] = v[i] * v[i];
    }
    EXPECT_LT(std::fabs(stats::mean_se(v).z(m.mean)), 4.0);
    EXPECT_LT(std::fabs(stats::mean_se(v2).z(m.second)), 4.0);
  }
}

TEST(Lifetime, CdfInvariants) {
  const std::vector<LifetimeSpec> specs = {LifetimeSpec(ExponentialLifetime{2.0}), LifetimeSpec(WeibullLifetime{1.0, 0.5}),
                                           LifetimeSpec(WeibullLifetime{2.0, 3.0}), LifetimeSpec(UniformLifetime{0.5, 1.5})};
  for (const auto& l : specs) {
    EXPECT_EQ(l.cdf(0.0), 0.0);
    double prev = 0.0;
    for (int k = 0; k <= 400; ++k) {
      const double t = 0.01 * k;
      ASSERT_GE(l.cdf(t), prev);
      ASSERT_NEAR(l.cdf(t) + l.survival(t), 1.0, 1e-15);
      prev = l.cdf(t);
    }
    EXPECT_NEAR(l.cdf(1e3), 1.0, 1e-12);
  }
}

TEST(Lifetime, HolderExponentBoundsIncrements) {
  const std::vector<LifetimeSpec> specs = {LifetimeSpec(ExponentialLifetime{2.0}), LifetimeSpec(WeibullLifetime{1.0, 0.5}),
                                           LifetimeSpec(WeibullLifetime{2.0, 3.0}), LifetimeSpec(UniformLifetime{0.5, 1.5})};
  const double T = 3.0;
  for (const auto& l : specs) {
    const double a = l.holder_exponent();
    ASSERT_GT(a, 0.0);
    ASSERT_LE(a, 1.0);
    // C fitted once on a coarse mesh, with the smallest mesh gap included.
    double C = 0.0;
    for (int i = 0; i <= 30; ++i) {
      for (int j = i + 1; j <= 30; ++j) {
        const double s = 0.1 * i, t = 0.1 * j;
        C = std::max(C, (l.cdf(t) - l.cdf(s)) / std::pow(t - s, a));
      }
    }
    for (double d : {1e-3, 1e-4, 1e-6}) C = std::max(C, l.cdf(d) / std::pow(d, a));
    C *= 1.5;
    RandomStream rng(StreamKey::root(11));
    for (int k = 0; k < 10000; ++k) {
      double s = T * rng.uniform(), t = T * rng.uniform();
      if (s > t) std::swap(s, t);
      if (t == s) continue;
      ASSERT_LE(l.cdf(t) - l.cdf(s), C * std::pow(t - s, a)) << s << " " << t;
    }
  }
  EXPECT_DOUBLE_EQ(LifetimeSpec(WeibullLifetime{1.0, 0.5}).holder_exponent(), 0.5);
  EXPECT_DOUBLE_EQ(LifetimeSpec(WeibullLifetime{1.0, 3.0}).holder_exponent(), 1.0);
}

TEST(Lifetime, SampleMatchesCdf) {
  const LifetimeSpec l(WeibullLifetime{1.5, 0.7});
  RandomStream rng(StreamKey::root(12));
  const int n = 200000;
  int below = 0;
  for (int i = 0; i < n; ++i) below += l.sample(rng) <= 1.0;
  const double p = l.cdf(1.0);
  EXPECT_LT(std::fabs(below / double(n) - p), 4 * std::sqrt(p * (1 - p) / n));
}

TEST(Lifetime, AtomFailsH4) {
  const LifetimeSpec atom(UniformLifetime{1.0, 1.0});
  EXPECT_TRUE(atom.has_atom());
  EXPECT_EQ(atom.holder_exponent(), 0.0);
  EXPECT_EQ(atom.survival(1.0), 0.0);
  EXPECT_EQ(atom.survival_left(1.0), 1.0);
  auto m = fixtures::clt_model();
  m.lifetime = atom;
  const auto r = m.validate();
  EXPECT_TRUE(r.lln_ready());
  EXPECT_FALSE(r.h4);
  EXPECT_FALSE(r.clt_ready());
  EXPECT_THROW(m.require_clt(), AssumptionError);
}

TEST(ModelSpec, ValidateReportsAssumptions) {
  const auto r = fixtures::clt_model().validate();
  EXPECT_TRUE(r.h1);
  EXPECT_TRUE(r.h2);
  EXPECT_TRUE(r.h3);
  EXPECT_TRUE(r.h4);
  EXPECT_DOUBLE_EQ(r.alpha, 1.0);
  EXPECT_NO_THROW(fixtures::clt_model().require_clt());
  auto bad = fixtures::markov();
  bad.horizon = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(ModelSpec, InvalidParametersRejected) {
  EXPECT_THROW(LifetimeSpec(ExponentialLifetime{0.0}), ConfigError);
  EXPECT_THROW(LifetimeSpec(WeibullLifetime{1.0, -1.0}), ConfigError);
  EXPECT_THROW(LifetimeSpec(UniformLifetime{2.0, 1.0}), ConfigError);
  EXPECT_THROW(RateShape(ConstantRate{-1.0}), ConfigError);
  EXPECT_THROW(RateShape(PiecewiseConstantRate{{1.0, 0.5}, {1.0, 2.0, 3.0}}), ConfigError);
  EXPECT_THROW(RateShape(PiecewiseConstantRate{{1.0}, {1.0}}), ConfigError);
  EXPECT_THROW(ScaleLaw(DiscreteScale{{1.0, 2.0}, {0.5, 0.6}}), ConfigError);
  EXPECT_THROW(ScaleLaw(GammaScale{0.0, 1.0}), ConfigError);
  EXPECT_THROW(OffspringSpec(DeterministicOffspring{0}), ConfigError);
  EXPECT_THROW(OffspringSpec(TwoPointOffspring{1, 2, 1.5}), ConfigError);
  EXPECT_THROW(OffspringSpec(ShiftedPoissonOffspring{-0.5}), ConfigError);
}

TEST(ScaleLaw, Moments) {
  const ScaleLaw g(GammaScale{2.0, 0.5});
  EXPECT_DOUBLE_EQ(g.moment(1), 1.0);
  EXPECT_DOUBLE_EQ(g.moment(2), 1.5);
  EXPECT_DOUBLE_EQ(g.variance(), 0.5);
  const ScaleLaw d(DiscreteScale{{0.5, 1.5}, {0.5, 0.5}});
  EXPECT_DOUBLE_EQ(d.moment(1), 1.0);
  EXPECT_DOUBLE_EQ(d.moment(2), 1.25);
  EXPECT_FALSE(d.is_deterministic());
  EXPECT_TRUE(ScaleLaw{}.is_deterministic());
}

}  // namespace
