// Copyright 2026 The cmj Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Parametric law of one individual: lifetime eta, random birth-rate path b and
// offspring count L per birth event.
//
// A birth-rate path is b(s) = W * lambda(s) * (gated ? 1{s <= eta} : 1), with a
// deterministic shape lambda and a random scale W drawn once per individual.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "cmj/error.hpp"
#include "cmj/random.hpp"

namespace cmj {

namespace detail {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Lifetime

struct ExponentialLifetime {
  double rate;
};
struct WeibullLifetime {
  double scale;
  double shape;
};
/// Uniform on [a, b]. The degenerate case a == b is a point mass at a.
struct UniformLifetime {
  double a;
  double b;
};

class LifetimeSpec {
 public:
  using Family = std::variant<ExponentialLifetime, WeibullLifetime, UniformLifetime>;

  LifetimeSpec() : LifetimeSpec(ExponentialLifetime{1.0}) {}

  explicit LifetimeSpec(Family family) : family_(std::move(family)) {
    std::visit(detail::overloaded{
                   [](const ExponentialLifetime& f) {
                     detail::require(f.rate > 0.0 && std::isfinite(f.rate), "exponential lifetime: rate must be positive");
                   },
                   [](const WeibullLifetime& f) {
                     detail::require(f.scale > 0.0 && std::isfinite(f.scale), "weibull lifetime: scale must be positive");
                     detail::require(f.shape > 0.0 && std::isfinite(f.shape), "weibull lifetime: shape must be positive");
                   },
                   [](const UniformLifetime& f) {
                     detail::require(f.a >= 0.0 && std::isfinite(f.b), "uniform lifetime: a must be nonnegative");
                     detail::require(f.b >= f.a, "uniform lifetime: b must not be below a");
                     detail::require(f.b > 0.0, "uniform lifetime: b must be positive");
                   },
               },
               family_);
  }

  [[nodiscard]] const Family& family() const noexcept { return family_; }

  /// F(t) = P(eta <= t).
  [[nodiscard]] double cdf(double t) const noexcept {
    if (t < 0.0) return 0.0;
    return std::visit(detail::overloaded{
                          [t](const ExponentialLifetime& f) { return -std::expm1(-f.rate * t); },
                          [t](const WeibullLifetime& f) { return -std::expm1(-std::pow(t / f.scale, f.shape)); },
                          [t](const UniformLifetime& f) {
                            if (t < f.a) return 0.0;
                            if (t >= f.b) return 1.0;
                            return (t - f.a) / (f.b - f.a);
                          },
                      },
                      family_);
  }

  /// F^c(t) = P(eta > t).
  [[nodiscard]] double survival(double t) const noexcept {
    if (t < 0.0) return 1.0;
    return std::visit(detail::overloaded{
                          [t](const ExponentialLifetime& f) { return std::exp(-f.rate * t); },
                          [t](const WeibullLifetime& f) { return std::exp(-std::pow(t / f.scale, f.shape)); },
                          [t](const UniformLifetime& f) {
                            if (t < f.a) return 1.0;
                            if (t >= f.b) return 0.0;
                            return (f.b - t) / (f.b - f.a);
                          },
                      },
                      family_);
  }

  /// P(eta >= t); differs from survival() only at an atom.
  [[nodiscard]] double survival_left(double t) const noexcept {
    if (const auto* u = std::get_if<UniformLifetime>(&family_); u && u->a == u->b) return t <= u->a ? 1.0 : 0.0;
    return survival(t);
  }

  [[nodiscard]] bool has_atom() const noexcept {
    const auto* u = std::get_if<UniformLifetime>(&family_);
    return u != nullptr && u->a == u->b;
  }

  /// Exponent alpha with F(t) - F(s) <= C (t - s)^alpha on bounded intervals; 0 when F has an atom.
  [[nodiscard]] double holder_exponent() const noexcept {
    return std::visit(detail::overloaded{
                          [](const ExponentialLifetime&) { return 1.0; },
                          [](const WeibullLifetime& f) { return std::min(f.shape, 1.0); },
                          [](const UniformLifetime& f) { return f.a == f.b ? 0.0 : 1.0; },
                      },
                      family_);
  }

  /// Points where F^c is not differentiable.
  [[nodiscard]] std::vector<double> kinks() const {
    if (const auto* u = std::get_if<UniformLifetime>(&family_)) {
      if (u->a == u->b) return {u->a};
      return u->a > 0.0 ? std::vector<double>{u->a, u->b} : std::vector<double>{u->b};
    }
    return {};
  }

  double sample(RandomStream& rng) const noexcept {
    return std::visit(detail::overloaded{
                          [&](const ExponentialLifetime& f) { return rng.exponential(f.rate); },
                          [&](const WeibullLifetime& f) {
                            return f.scale * std::pow(-std::log(rng.uniform_open()), 1.0 / f.shape);
                          },
                          [&](const UniformLifetime& f) { return f.a + (f.b - f.a) * rng.uniform_open(); },
                      },
                      family_);
  }

 private:
  Family family_;
};

// ---------------------------------------------------------------------------
// Birth rate

struct ConstantRate {
  double c;
};
/// lambda(s) = c * exp(-beta s)
struct ExpDecayRate {
  double c;
  double beta;
};
/// lambda(s) = levels[i] on [breakpoints[i-1], breakpoints[i]); levels.size() == breakpoints.size() + 1.
struct PiecewiseConstantRate {
  std::vector<double> breakpoints;
  std::vector<double> levels;
};

class RateShape {
 public:
  using Family = std::variant<ConstantRate, ExpDecayRate, PiecewiseConstantRate>;

  RateShape() : RateShape(ConstantRate{1.0}) {}

  explicit RateShape(Family family) : family_(std::move(family)) {
    std::visit(detail::overloaded{
                   [](const ConstantRate& f) {
                     detail::require(f.c >= 0.0 && std::isfinite(f.c), "constant rate: c must be nonnegative");
                   },
                   [](const ExpDecayRate& f) {
                     detail::require(f.c >= 0.0 && std::isfinite(f.c), "exp-decay rate: c must be nonnegative");
                     detail::require(f.beta >= 0.0 && std::isfinite(f.beta), "exp-decay rate: beta must be nonnegative");
                   },
                   [](const PiecewiseConstantRate& f) {
                     detail::require(f.levels.size() == f.breakpoints.size() + 1,
                                     "piecewise rate: need exactly one more level than breakpoints");
                     for (std::size_t i = 0; i < f.breakpoints.size(); ++i) {
                       detail::require(f.breakpoints[i] > (i == 0 ? 0.0 : f.breakpoints[i - 1]),
                                       "piecewise rate: breakpoints must be positive and increasing");
                     }
                     for (double l : f.levels) {
                       detail::require(l >= 0.0 && std::isfinite(l), "piecewise rate: levels must be nonnegative");
                     }
                   },
               },
               family_);
  }

  [[nodiscard]] const Family& family() const noexcept { return family_; }

  /// lambda(s), right-continuous.
  [[nodiscard]] double value(double s) const noexcept {
    return std::visit(detail::overloaded{
                          [](const ConstantRate& f) { return f.c; },
                          [s](const ExpDecayRate& f) { return f.c * std::exp(-f.beta * s); },
                          [s](const PiecewiseConstantRate& f) {
                            auto it = std::upper_bound(f.breakpoints.begin(), f.breakpoints.end(), s);
                            return f.levels[static_cast<std::size_t>(it - f.breakpoints.begin())];
                          },
                      },
                      family_);
  }

  /// lambda(s-), the left limit.
  [[nodiscard]] double value_left(double s) const noexcept {
    if (const auto* p = std::get_if<PiecewiseConstantRate>(&family_)) {
      auto it = std::lower_bound(p->breakpoints.begin(), p->breakpoints.end(), s);
      return p->levels[static_cast<std::size_t>(it - p->breakpoints.begin())];
    }
    return value(s);
  }

  /// sup of lambda over [0, horizon].
  [[nodiscard]] double sup(double horizon) const noexcept {
    return std::visit(detail::overloaded{
                          [](const ConstantRate& f) { return f.c; },
                          [](const ExpDecayRate& f) { return f.c; },
                          [horizon](const PiecewiseConstantRate& f) {
                            double m = f.levels[0];
                            for (std::size_t i = 0; i < f.breakpoints.size() && f.breakpoints[i] <= horizon; ++i) {
                              m = std::max(m, f.levels[i + 1]);
                            }
                            return m;
                          },
                      },
                      family_);
  }

  [[nodiscard]] bool is_zero(double horizon) const noexcept { return sup(horizon) == 0.0; }

  [[nodiscard]] std::vector<double> breakpoints() const {
    if (const auto* p = std::get_if<PiecewiseConstantRate>(&family_)) return p->breakpoints;
    return {};
  }

 private:
  Family family_;
};

/// W == 1.
struct DeterministicScale {};
struct DiscreteScale {
  std::vector<double> values;
  std::vector<double> probs;
};
struct GammaScale {
  double shape;
  double scale;
};

class ScaleLaw {
 public:
  using Family = std::variant<DeterministicScale, DiscreteScale, GammaScale>;

  ScaleLaw() = default;

  explicit ScaleLaw(Family family) : family_(std::move(family)) {
    if (auto* d = std::get_if<DiscreteScale>(&family_)) {
      detail::require(!d->values.empty() && d->values.size() == d->probs.size(),
                      "discrete scale: values and probs must be nonempty and of equal length");
      double total = 0.0;
      for (std::size_t i = 0; i < d->values.size(); ++i) {
        detail::require(d->values[i] >= 0.0 && std::isfinite(d->values[i]), "discrete scale: values must be nonnegative");
        detail::require(d->probs[i] >= 0.0, "discrete scale: probs must be nonnegative");
        total += d->probs[i];
      }
      detail::require(std::fabs(total - 1.0) < 1e-9, "discrete scale: probs must sum to 1");
    } else if (auto* g = std::get_if<GammaScale>(&family_)) {
      detail::require(g->shape > 0.0 && std::isfinite(g->shape), "gamma scale: shape must be positive");
      detail::require(g->scale > 0.0 && std::isfinite(g->scale), "gamma scale: scale must be positive");
    }
  }

  [[nodiscard]] const Family& family() const noexcept { return family_; }

  [[nodiscard]] bool is_deterministic() const noexcept {
    if (std::holds_alternative<DeterministicScale>(family_)) return true;
    if (const auto* d = std::get_if<DiscreteScale>(&family_)) {
      for (std::size_t i = 0; i < d->values.size(); ++i) {
        if (d->probs[i] > 0.0 && d->values[i] != d->values[0]) return false;
      }
      return true;
    }
    return false;
  }

  /// E[W^n].
  [[nodiscard]] double moment(int n) const noexcept {
    return std::visit(detail::overloaded{
                          [](const DeterministicScale&) { return 1.0; },
                          [n](const DiscreteScale& d) {
                            double m = 0.0;
                            for (std::size_t i = 0; i < d.values.size(); ++i) m += d.probs[i] * std::pow(d.values[i], n);
                            return m;
                          },
                          [n](const GammaScale& g) {
                            double m = 1.0;
                            for (int i = 0; i < n; ++i) m *= g.scale * (g.shape + i);
                            return m;
                          },
                      },
                      family_);
  }

  [[nodiscard]] double variance() const noexcept {
    const double m1 = moment(1);
    return std::max(0.0, moment(2) - m1 * m1);
  }

  double sample(RandomStream& rng) const noexcept {
    return std::visit(detail::overloaded{
                          [](const DeterministicScale&) { return 1.0; },
                          [&](const DiscreteScale& d) { return d.values[rng.discrete(d.probs)]; },
                          [&](const GammaScale& g) { return g.scale * rng.gamma(g.shape); },
                      },
                      family_);
  }

 private:
  Family family_{DeterministicScale{}};
};

struct BirthRateSpec {
  RateShape shape;
  ScaleLaw scale;
  bool gated = true;
};

// ---------------------------------------------------------------------------
// Offspring

struct DeterministicOffspring {
  std::uint32_t k;
};
/// L = k1 with probability p, k2 otherwise.
struct TwoPointOffspring {
  std::uint32_t k1;
  std::uint32_t k2;
  double p;
};
/// L = 1 + Poisson(nu).
struct ShiftedPoissonOffspring {
  double nu;
};

struct OffspringMoments {
  double mean;
  double second;
  double fourth;
  double factorial2;  // E[L^2 - L]
};

class OffspringSpec {
 public:
  using Family = std::variant<DeterministicOffspring, TwoPointOffspring, ShiftedPoissonOffspring>;

  OffspringSpec() : OffspringSpec(DeterministicOffspring{1}) {}

  explicit OffspringSpec(Family family) : family_(std::move(family)) {
    std::visit(detail::overloaded{
                   [](const DeterministicOffspring& f) { detail::require(f.k >= 1, "offspring: k must be positive"); },
                   [](const TwoPointOffspring& f) {
                     detail::require(f.k1 >= 1 && f.k2 >= 1, "offspring: k1 and k2 must be positive");
                     detail::require(f.p >= 0.0 && f.p <= 1.0, "offspring: p must be a probability");
                   },
                   [](const ShiftedPoissonOffspring& f) {
                     detail::require(f.nu >= 0.0 && std::isfinite(f.nu), "offspring: nu must be nonnegative");
                   },
               },
               family_);
  }

  [[nodiscard]] const Family& family() const noexcept { return family_; }

  [[nodiscard]] OffspringMoments moments() const noexcept {
    OffspringMoments m = std::visit(
        detail::overloaded{
            [](const DeterministicOffspring& f) {
              const double k = f.k;
              return OffspringMoments{k, k * k, k * k * k * k, 0.0};
            },
            [](const TwoPointOffspring& f) {
              const double a = f.k1;
              const double b = f.k2;
              const double q = 1.0 - f.p;
              return OffspringMoments{f.p * a + q * b, f.p * a * a + q * b * b,
                                      f.p * a * a * a * a + q * b * b * b * b, 0.0};
            },
            [](const ShiftedPoissonOffspring& f) {
              // Raw Poisson moments, then binomial expansion of (1 + P)^n.
              const double v = f.nu;
              const double p1 = v;
              const double p2 = v + v * v;
              const double p3 = v * v * v + 3 * v * v + v;
              const double p4 = v * v * v * v + 6 * v * v * v + 7 * v * v + v;
              return OffspringMoments{1 + p1, 1 + 2 * p1 + p2, 1 + 4 * p1 + 6 * p2 + 4 * p3 + p4, 0.0};
            },
        },
        family_);
    m.factorial2 = m.second - m.mean;
    return m;
  }

  std::uint64_t sample(RandomStream& rng) const noexcept {
    return std::visit(detail::overloaded{
                          [](const DeterministicOffspring& f) { return std::uint64_t{f.k}; },
                          [&](const TwoPointOffspring& f) {
                            return std::uint64_t{rng.uniform() < f.p ? f.k1 : f.k2};
                          },
                          [&](const ShiftedPoissonOffspring& f) { return 1 + rng.poisson(f.nu); },
                      },
                      family_);
  }

 private:
  Family family_;
};

// ---------------------------------------------------------------------------
// Full model

/// Which of the moment/regularity assumptions hold.
struct AssumptionReport {
  bool h1 = false;  // finite mean offspring and bounded mean birth rate
  bool h2 = false;  // finite second moments of L and b
  bool h3 = false;  // finite fourth moments of L and b
  bool h4 = false;  // Hoelder-continuous lifetime cdf
  double alpha = 0.0;

  [[nodiscard]] bool lln_ready() const noexcept { return h1; }
  [[nodiscard]] bool clt_ready() const noexcept { return h3 && h4; }
};

struct ModelSpec {
  LifetimeSpec lifetime;
  BirthRateSpec birthrate;
  OffspringSpec offspring;
  double horizon = 1.0;

  AssumptionReport validate() const {
    detail::require(horizon > 0.0 && std::isfinite(horizon), "model horizon must be positive");
    const double lam = birthrate.shape.sup(horizon);
    const auto om = offspring.moments();
    auto finite = [](double v) { return std::isfinite(v); };
    AssumptionReport r;
    r.h1 = finite(om.mean) && finite(lam * birthrate.scale.moment(1));
    r.h2 = r.h1 && finite(om.second) && finite(lam * lam * birthrate.scale.moment(2));
    r.h3 = r.h2 && finite(om.fourth) && finite(std::pow(lam, 4) * birthrate.scale.moment(4));
    r.alpha = lifetime.holder_exponent();
    r.h4 = r.alpha > 0.0;
    return r;
  }

  /// Throws AssumptionError unless the CLT assumptions hold.
  void require_clt() const {
    const auto r = validate();
    if (!r.h3) throw AssumptionError("fourth moments of the offspring count or birth rate are not finite");
    if (!r.h4) throw AssumptionError("lifetime distribution has an atom; its cdf is not Hoelder continuous");
  }
};

// ---------------------------------------------------------------------------
// Operations

/// One individual's (eta, b) draw. The path is evaluated through the owning BirthRateSpec.
struct IndividualDraw {
  double eta = 0.0;
  double scale = 1.0;
  double b_max = 0.0;
  double gate = std::numeric_limits<double>::infinity();  // b(s) = 0 for s > gate

  [[nodiscard]] double rate(const BirthRateSpec& spec, double s) const noexcept {
    if (s > gate) return 0.0;
    return scale * spec.shape.value(s);
  }
};

inline IndividualDraw sample_individual(const ModelSpec& model, RandomStream& rng) {
  IndividualDraw d;
  d.eta = model.lifetime.sample(rng);
  d.scale = model.birthrate.scale.sample(rng);
  d.b_max = d.scale * model.birthrate.shape.sup(model.horizon);
  d.gate = model.birthrate.gated ? d.eta : std::numeric_limits<double>::infinity();
  return d;
}

namespace detail {
inline void check_time(const ModelSpec& model, double s) {
  const double tol = 1e-12 * std::max(1.0, model.horizon);
  if (!(s >= -tol && s <= model.horizon + tol)) {
    throw DomainError("time " + std::to_string(s) + " outside [0, " + std::to_string(model.horizon) + "]");
  }
}
}  // namespace detail

/// E[b(s)] = E[W] lambda(s) P(eta >= s) (gated) or E[W] lambda(s).
inline double mean_birth_rate(const ModelSpec& model, double s) {
  detail::check_time(model, s);
  const auto& br = model.birthrate;
  const double v = br.scale.moment(1) * br.shape.value(s);
  return br.gated ? v * model.lifetime.survival_left(s) : v;
}

/// Left limit of mean_birth_rate at s.
inline double mean_birth_rate_left(const ModelSpec& model, double s) {
  detail::check_time(model, s);
  const auto& br = model.birthrate;
  const double v = br.scale.moment(1) * br.shape.value_left(s);
  return br.gated ? v * model.lifetime.survival_left(s) : v;
}

/// Cov(b(r), b(u)).
inline double cov_birth_rate(const ModelSpec& model, double r, double u) {
  detail::check_time(model, r);
  detail::check_time(model, u);
  const auto& br = model.birthrate;
  const double ll = br.shape.value(r) * br.shape.value(u);
  if (ll == 0.0) return 0.0;
  if (!br.gated) return br.scale.variance() * ll;
  const auto& lt = model.lifetime;
  const double m1 = br.scale.moment(1);
  return ll * (br.scale.moment(2) * lt.survival_left(std::max(r, u)) -
               m1 * m1 * (lt.survival_left(r) * lt.survival_left(u)));
}

/// Cov(b(r), 1{eta > t}).
inline double cov_birth_lifetime(const ModelSpec& model, double r, double t) {
  detail::check_time(model, r);
  detail::check_time(model, t);
  const auto& br = model.birthrate;
  if (!br.gated) return 0.0;
  const auto& lt = model.lifetime;
  const double joint = r > t ? lt.survival_left(r) : lt.survival(t);  // P(eta >= r, eta > t)
  return br.scale.moment(1) * br.shape.value(r) * (joint - lt.survival_left(r) * lt.survival(t));
}

inline OffspringMoments offspring_moments(const ModelSpec& model) { return model.offspring.moments(); }

}  // namespace cmj
