// Copyright 2026 The cmj Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Sample statistics with delete-one jackknife standard errors. Leave-one-out
// values come from power sums of the centered data, so each statistic costs O(n).

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "cmj/error.hpp"

namespace cmj::stats {

struct Estimate {
  double value = 0.0;
  double se = 0.0;

  /// (value - target) / se; 0 when both the difference and se vanish.
  [[nodiscard]] double z(double target) const noexcept {
    const double d = value - target;
    if (se > 0.0) return d / se;
    return d == 0.0 ? 0.0 : std::copysign(INFINITY, d);
  }
};

inline double mean(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v;
  return s / static_cast<double>(a.size());
}

/// Mean with the usual standard error sd / sqrt(n).
inline Estimate mean_se(std::span<const double> a) {
  const double n = static_cast<double>(a.size());
  const double m = mean(a);
  double ss = 0.0;
  for (double v : a) ss += (v - m) * (v - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

namespace detail {
inline void require_n(std::size_t n, std::size_t min) {
  if (n < min) throw ConfigError("too few samples for the requested statistic");
}

template <class Stat>
Estimate jackknife(std::size_t n, double full, Stat&& leave_out) {
  double sum = 0.0;
  std::vector<double> th(n);
  for (std::size_t i = 0; i < n; ++i) {
    th[i] = leave_out(i);
    sum += th[i];
  }
  const double bar = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double t : th) ss += (t - bar) * (t - bar);
  return {full, std::sqrt(ss * (static_cast<double>(n) - 1.0) / static_cast<double>(n))};
}

struct Sums2 {
  double n = 0, a = 0, b = 0, aa = 0, bb = 0, ab = 0;

  [[nodiscard]] Sums2 without(double x, double y) const noexcept {
    return {n - 1, a - x, b - y, aa - x * x, bb - y * y, ab - x * y};
  }
  [[nodiscard]] double cov() const noexcept { return (ab - a * b / n) / (n - 1); }
  [[nodiscard]] double corr() const noexcept {
    const double va = aa - a * a / n;
    const double vb = bb - b * b / n;
    return (ab - a * b / n) / std::sqrt(va * vb);
  }
};

struct Sums4 {
  double n = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0;

  [[nodiscard]] Sums4 without(double x) const noexcept {
    const double x2 = x * x;
    return {n - 1, s1 - x, s2 - x2, s3 - x2 * x, s4 - x2 * x2};
  }
  // Central moments from sums about an arbitrary origin.
  [[nodiscard]] double m2() const noexcept {
    const double d = s1 / n;
    return s2 / n - d * d;
  }
  [[nodiscard]] double m3() const noexcept {
    const double d = s1 / n;
    return s3 / n - 3 * d * s2 / n + 2 * d * d * d;
  }
  [[nodiscard]] double m4() const noexcept {
    const double d = s1 / n;
    return s4 / n - 4 * d * s3 / n + 6 * d * d * s2 / n - 3 * d * d * d * d;
  }
  [[nodiscard]] double skewness() const noexcept { return m3() / std::pow(m2(), 1.5); }
  [[nodiscard]] double excess_kurtosis() const noexcept {
    const double v = m2();
    return m4() / (v * v) - 3.0;
  }
};

inline std::vector<double> centered(std::span<const double> a) {
  const double m = mean(a);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - m;
  return out;
}

inline Sums2 sums2(const std::vector<double>& a, const std::vector<double>& b) {
  Sums2 s;
  s.n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    s.a += a[i], s.b += b[i], s.aa += a[i] * a[i], s.bb += b[i] * b[i], s.ab += a[i] * b[i];
  }
  return s;
}

inline Sums4 sums4(const std::vector<double>& a) {
  Sums4 s;
  s.n = static_cast<double>(a.size());
  for (double v : a) {
    const double v2 = v * v;
    s.s1 += v, s.s2 += v2, s.s3 += v2 * v, s.s4 += v2 * v2;
  }
  return s;
}
}  // namespace detail

/// Unbiased sample covariance.
inline Estimate covariance(std::span<const double> a, std::span<const double> b) {
  detail::require_n(a.size(), 3);
  const auto ca = detail::centered(a);
  const auto cb = detail::centered(b);
  const auto s = detail::sums2(ca, cb);
  return detail::jackknife(a.size(), s.cov(), [&](std::size_t i) { return s.without(ca[i], cb[i]).cov(); });
}

inline Estimate correlation(std::span<const double> a, std::span<const double> b) {
  detail::require_n(a.size(), 3);
  const auto ca = detail::centered(a);
  const auto cb = detail::centered(b);
  const auto s = detail::sums2(ca, cb);
  return detail::jackknife(a.size(), s.corr(), [&](std::size_t i) { return s.without(ca[i], cb[i]).corr(); });
}

/// Moment-ratio skewness m3 / m2^{3/2}.
inline Estimate skewness(std::span<const double> a) {
  detail::require_n(a.size(), 3);
  const auto ca = detail::centered(a);
  const auto s = detail::sums4(ca);
  return detail::jackknife(a.size(), s.skewness(), [&](std::size_t i) { return s.without(ca[i]).skewness(); });
}

/// Moment-ratio excess kurtosis m4 / m2^2 - 3.
inline Estimate excess_kurtosis(std::span<const double> a) {
  detail::require_n(a.size(), 4);
  const auto ca = detail::centered(a);
  const auto s = detail::sums4(ca);
  return detail::jackknife(a.size(), s.excess_kurtosis(),
                           [&](std::size_t i) { return s.without(ca[i]).excess_kurtosis(); });
}

/// Ordinary least squares y = intercept + slope x.
struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_se = 0.0;
};

inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  detail::require_n(x.size(), 3);
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    rss += r * r;
  }
  f.slope_se = std::sqrt(rss / (static_cast<double>(x.size()) - 2.0) / sxx);
  return f;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw ConfigError("median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace cmj::stats
