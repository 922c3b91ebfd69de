// Copyright 2026 The cmj Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "cmj/error.hpp"

namespace cmj {

/// Uniform grid t_i = i * h, i = 0 .. n-1.
class TimeGrid {
 public:
  TimeGrid() = default;

  TimeGrid(double step, std::size_t n_points) : h_(step), n_(n_points) {
    if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("time grid step must be positive");
    if (n_points == 0) throw ConfigError("time grid needs at least one point");
  }

  /// Largest grid with step h whose last point does not exceed T.
  static TimeGrid covering(double step, double horizon) {
    if (!(step > 0.0)) throw ConfigError("time grid step must be positive");
    if (!(horizon >= 0.0)) throw ConfigError("time grid horizon must be nonnegative");
    const auto n = static_cast<std::size_t>(std::floor(horizon / step + 1e-9)) + 1;
    return TimeGrid(step, n);
  }

  [[nodiscard]] double step() const noexcept { return h_; }
  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] double time(std::size_t i) const noexcept { return static_cast<double>(i) * h_; }
  [[nodiscard]] double last() const noexcept { return time(n_ - 1); }

  /// Index of the node at time t, if t is a node (relative tolerance 1e-9 of h).
  [[nodiscard]] std::optional<std::size_t> index_of(double t) const noexcept {
    if (t < -1e-9 * h_) return std::nullopt;
    const double r = std::round(t / h_);
    if (std::fabs(r * h_ - t) > 1e-9 * h_) return std::nullopt;
    const auto i = static_cast<std::size_t>(r);
    if (i >= n_) return std::nullopt;
    return i;
  }

  [[nodiscard]] std::size_t require_index(double t) const {
    if (auto i = index_of(t)) return *i;
    throw ConfigError("time " + std::to_string(t) + " is not a node of the grid");
  }

  /// Smallest i with time(i) >= t (size() when t is past the last node).
  [[nodiscard]] std::size_t first_at_or_after(double t) const noexcept {
    if (t <= 0.0) return 0;
    auto i = static_cast<std::size_t>(std::ceil(t / h_));
    if (i > 0 && time(i - 1) >= t) --i;
    if (time(i) < t) ++i;
    return i < n_ ? i : n_;
  }

  [[nodiscard]] std::vector<double> times() const {
    std::vector<double> out(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = time(i);
    return out;
  }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double h_ = 1.0;
  std::size_t n_ = 1;
};

}  // namespace cmj
