// Copyright 2026 The cmj Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Mean renewal equation
//   M1(t) = F^c(t) + int_0^t Lbar M1(t - s) bbar(s) ds
// solved by trapezoid product integration on a uniform grid, plus the
// convolution functionals of M1 used by the fluctuation decomposition.
//
// A jump of bbar at a node is handled exactly: each cell uses the one-sided
// limits of bbar at its two ends, so node j carries (bbar(s_j-) + bbar(s_j+))/2.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "cmj/error.hpp"
#include "cmj/grid.hpp"
#include "cmj/model.hpp"

namespace cmj {

/// M1 on a uniform grid, together with the discretized kernel used to produce it.
class MeanSolution {
 public:
  MeanSolution() = default;

  [[nodiscard]] const TimeGrid& grid() const noexcept { return grid_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
  [[nodiscard]] double operator[](std::size_t i) const noexcept { return values_[i]; }
  [[nodiscard]] double step() const noexcept { return grid_.step(); }
  [[nodiscard]] double offspring_mean() const noexcept { return lbar_; }
  [[nodiscard]] const std::vector<double>& survival() const noexcept { return survival_; }

  /// Linear interpolation of M1 at t in [0, last].
  [[nodiscard]] double at(double t) const noexcept {
    const double h = grid_.step();
    if (t <= 0.0) return values_.front();
    const auto j = std::min(static_cast<std::size_t>(t / h), values_.size() - 2);
    const double w = (t - grid_.time(j)) / h;
    return (1.0 - w) * values_[j] + w * values_[j + 1];
  }

  /// Discrete value of int_0^{t_i} Lbar M1(t_i - s) bbar(s) ds used by the solver.
  [[nodiscard]] double mean_convolution(std::size_t i) const noexcept {
    if (i == 0) return 0.0;
    const double h = grid_.step();
    const double lh = lbar_ * h;
    return lh * history(i) + 0.5 * lh * bbar_plus_[0] * values_[i];
  }

  /// |M1(t_i) - F^c(t_i) - mean_convolution(i)| relative to the size of the terms.
  [[nodiscard]] double relative_residual(std::size_t i) const noexcept {
    const double conv = mean_convolution(i);
    const double scale = std::fabs(values_[i]) + std::fabs(survival_[i]) + std::fabs(conv);
    return scale > 0.0 ? std::fabs(values_[i] - survival_[i] - conv) / scale : 0.0;
  }

  [[nodiscard]] double max_relative_residual() const noexcept {
    double r = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) r = std::max(r, relative_residual(i));
    return r;
  }

 private:
  friend MeanSolution solve_mean(const ModelSpec&, const TimeGrid&);

  // Convolution terms that do not involve M1(t_i) itself, in the solver's summation order.
  [[nodiscard]] double history(std::size_t i) const noexcept {
    double acc = 0.5 * values_[0] * bbar_minus_[i];
    for (std::size_t j = 1; j < i; ++j) acc += values_[i - j] * bbar_mid_[j];
    return acc;
  }

  TimeGrid grid_;
  std::vector<double> values_;
  std::vector<double> survival_;
  std::vector<double> bbar_plus_, bbar_minus_, bbar_mid_;
  double lbar_ = 1.0;
};

inline MeanSolution solve_mean(const ModelSpec& model, const TimeGrid& grid) {
  model.validate();
  if (grid.last() > model.horizon * (1 + 1e-12)) throw ConfigError("solver grid exceeds the model horizon");
  const double h = grid.step();
  for (double k : model.lifetime.kinks()) {
    if (k > 0.0 && k < grid.last() && !grid.index_of(k)) {
      throw ConfigError("lifetime survival function has a kink at " + std::to_string(k) +
                        " which must be a grid node");
    }
  }

  const std::size_t n = grid.size();
  MeanSolution sol;
  sol.grid_ = grid;
  sol.lbar_ = model.offspring.moments().mean;
  sol.values_.assign(n, 0.0);
  sol.survival_.resize(n);
  sol.bbar_plus_.resize(n);
  sol.bbar_minus_.resize(n);
  double sup_b = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double s = grid.time(j);
    sol.survival_[j] = model.lifetime.survival(s);
    sol.bbar_plus_[j] = mean_birth_rate(model, s);
    sol.bbar_minus_[j] = mean_birth_rate_left(model, s);
    sup_b = std::max({sup_b, sol.bbar_plus_[j], sol.bbar_minus_[j]});
  }
  if (!(sol.lbar_ * sup_b * h < 1.0)) {
    throw ConfigError("step too large: Lbar * sup bbar * h must be below 1");
  }

  const double lh = sol.lbar_ * h;
  const double diag = 1.0 - 0.5 * lh * sol.bbar_plus_[0];
  sol.bbar_mid_.resize(n);
  for (std::size_t j = 0; j < n; ++j) sol.bbar_mid_[j] = 0.5 * (sol.bbar_plus_[j] + sol.bbar_minus_[j]);
  auto& m = sol.values_;
  m[0] = sol.survival_[0];
  for (std::size_t i = 1; i < n; ++i) m[i] = (sol.survival_[i] + lh * sol.history(i)) / diag;
  return sol;
}

/// Closed-form M1 for exponential lifetimes with a constant rate shape.
///   gated:   M1(t) = exp((kappa - mu) t)
///   ungated: M1(t) = (kappa exp(kappa t) + mu exp(-mu t)) / (kappa + mu)
/// with kappa = Lbar E[W] c and mu the death rate.
struct MarkovMean {
  double kappa;
  double mu;
  bool gated;

  [[nodiscard]] double operator()(double t) const noexcept {
    if (gated) return std::exp((kappa - mu) * t);
    return (kappa * std::exp(kappa * t) + mu * std::exp(-mu * t)) / (kappa + mu);
  }
};

inline std::optional<MarkovMean> markov_mean(const ModelSpec& model) {
  const auto* life = std::get_if<ExponentialLifetime>(&model.lifetime.family());
  const auto* shape = std::get_if<ConstantRate>(&model.birthrate.shape.family());
  if (!life || !shape) return std::nullopt;
  const double kappa = model.offspring.moments().mean * model.birthrate.scale.moment(1) * shape->c;
  return MarkovMean{kappa, life->rate, model.birthrate.gated};
}

// ---------------------------------------------------------------------------
// Convolutions of M1 with one individual's birth-rate path

/// int_0^{t} Lbar M1(t - s) b(s) ds for a fixed node t = t_i and any path
/// b(s) = W lambda(s) 1{s <= gate}. Precomputes the cumulative integral of
/// M1(t - s) lambda(s) so each path costs O(1).
class PathConvolver {
 public:
  PathConvolver(const MeanSolution& m1, const BirthRateSpec& spec, std::size_t node)
      : m1_(&m1), spec_(&spec), node_(node), cumulative_(node + 1, 0.0) {
    if (node >= m1.grid().size()) throw ConfigError("convolution node outside the mean-solution grid");
    const double h = m1.step();
    const auto& grid = m1.grid();
    for (std::size_t j = 0; j < node; ++j) {
      const double left = m1[node - j] * spec.shape.value(grid.time(j));
      const double right = m1[node - j - 1] * spec.shape.value_left(grid.time(j + 1));
      cumulative_[j + 1] = cumulative_[j] + 0.5 * h * (left + right);
    }
  }

  [[nodiscard]] std::size_t node() const noexcept { return node_; }
  [[nodiscard]] double time() const noexcept { return m1_->grid().time(node_); }

  /// int_0^{min(t, a)} M1(t - s) lambda(s) ds.
  [[nodiscard]] double shape_integral(double a) const noexcept {
    const double t = time();
    if (a >= t) return cumulative_[node_];
    if (a <= 0.0) return 0.0;
    const double h = m1_->step();
    const auto j = std::min(static_cast<std::size_t>(a / h), node_ - 1);
    const double sj = m1_->grid().time(j);
    const double left = (*m1_)[node_ - j] * spec_->shape.value(sj);
    const double right = m1_->at(t - a) * spec_->shape.value_left(a);
    return cumulative_[j] + 0.5 * (a - sj) * (left + right);
  }

  [[nodiscard]] double operator()(const IndividualDraw& draw) const noexcept {
    return m1_->offspring_mean() * draw.scale * shape_integral(draw.gate);
  }

 private:
  const MeanSolution* m1_;
  const BirthRateSpec* spec_;
  std::size_t node_;
  std::vector<double> cumulative_;
};

inline double convolve_with_path(const MeanSolution& m1, const BirthRateSpec& spec, const IndividualDraw& draw,
                                 std::size_t node) {
  return PathConvolver(m1, spec, node)(draw);
}

namespace detail {
/// Lbar^2 sum_a sum_b w_a w_b M1(t_i - r_a) M1(t_j - u_b) cov(a, b) with trapezoid weights.
template <class Cov>
double covu2_sum(const MeanSolution& m1, std::size_t i, std::size_t j, Cov&& cov) {
  if (i > j) std::swap(i, j);
  if (i == 0) return 0.0;
  const double h = m1.step();
  auto w = [h](std::size_t a, std::size_t last) { return (a == 0 || a == last) ? 0.5 * h : h; };
  double outer = 0.0;
  for (std::size_t a = 0; a <= i; ++a) {
    double inner = 0.0;
    for (std::size_t b = 0; b <= j; ++b) inner += w(b, j) * m1[j - b] * cov(a, b);
    outer += w(a, i) * m1[i - a] * inner;
  }
  const double l = m1.offspring_mean();
  return l * l * outer;
}
}  // namespace detail

/// int_0^t int_0^s Lbar^2 M1(t - r) M1(s - u) Cov(b(r), b(u)) du dr at nodes t = t_i, s = t_j.
inline double double_integral_covU2(const MeanSolution& m1, const ModelSpec& model, std::size_t i, std::size_t j) {
  const auto& g = m1.grid();
  return detail::covu2_sum(m1, i, j,
                           [&](std::size_t a, std::size_t b) { return cov_birth_rate(model, g.time(a), g.time(b)); });
}

}  // namespace cmj
