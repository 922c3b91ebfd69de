// Copyright 2026 The cmj Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Poisson random measures with Lebesgue intensity on a rectangle, integrals of
// step functions against the compensated measure, and the moment identities
//   E[Qbar(f)^2]             = mu(f^2)
//   E[Qbar(f)^4]             = mu(f^4) + 3 mu(f^2)^2
//   E[Qbar(f)^2 Qbar(g)^2]   = mu(f^2 g^2) + mu(f^2) mu(g^2) + 2 mu(f g)^2
//   E[exp(i Qbar(f))]        = exp(mu(e^{if} - i f - 1))

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "cmj/error.hpp"
#include "cmj/parallel.hpp"
#include "cmj/random.hpp"
#include "json.hpp"

namespace cmj::prm {

/// [0, T] x [0, B] with unit intensity.
struct Region {
  double T = 1.0;
  double B = 1.0;

  Region() = default;
  Region(double t, double b) : T(t), B(b) {
    if (!(t >= 0.0 && b >= 0.0 && std::isfinite(t) && std::isfinite(b))) {
      throw ConfigError("PRM region bounds must be finite and nonnegative");
    }
  }
  [[nodiscard]] double mass() const noexcept { return T * B; }
};

struct Point {
  double s;
  double u;
};

/// Half-open cell [s0, s1) x [u0, u1) carrying a constant value.
struct Cell {
  double s0, s1, u0, u1;
  double value;

  [[nodiscard]] bool contains(const Point& p) const noexcept {
    return p.s >= s0 && p.s < s1 && p.u >= u0 && p.u < u1;
  }
};

namespace detail {
inline double overlap(double a0, double a1, double b0, double b1) noexcept {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}
inline double overlap_area(const Cell& a, const Cell& b) noexcept {
  return overlap(a.s0, a.s1, b.s0, b.s1) * overlap(a.u0, a.u1, b.u0, b.u1);
}
}  // namespace detail

/// Finite sum of values on pairwise disjoint cells.
class StepFunction {
 public:
  StepFunction() = default;

  explicit StepFunction(std::vector<Cell> cells) : cells_(std::move(cells)) {
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      const auto& c = cells_[i];
      if (!(c.s1 > c.s0 && c.u1 > c.u0) || !std::isfinite(c.value)) {
        throw ConfigError("step function cell must have positive extent and a finite value");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (detail::overlap_area(c, cells_[j]) > 0.0) throw ConfigError("step function cells must be disjoint");
      }
    }
  }

  static StepFunction indicator(double s0, double s1, double u0, double u1, double value = 1.0) {
    return StepFunction({Cell{s0, s1, u0, u1, value}});
  }

  [[nodiscard]] const std::vector<Cell>& cells() const noexcept { return cells_; }

  [[nodiscard]] double operator()(const Point& p) const noexcept {
    for (const auto& c : cells_) {
      if (c.contains(p)) return c.value;
    }
    return 0.0;
  }

  [[nodiscard]] StepFunction scaled(double a) const {
    auto cells = cells_;
    for (auto& c : cells) c.value *= a;
    return StepFunction(std::move(cells));
  }

  /// Same function restricted to the region.
  [[nodiscard]] StepFunction clipped(const Region& r) const {
    std::vector<Cell> out;
    for (const auto& c : cells_) {
      Cell d{std::max(c.s0, 0.0), std::min(c.s1, r.T), std::max(c.u0, 0.0), std::min(c.u1, r.B), c.value};
      if (d.s1 > d.s0 && d.u1 > d.u0) out.push_back(d);
    }
    return StepFunction(std::move(out));
  }

 private:
  std::vector<Cell> cells_;
};

/// mu(f^p) over the region.
inline double mu_power(const StepFunction& f, int p, const Region& r) {
  double total = 0.0;
  const auto fc = f.clipped(r);
  for (const auto& c : fc.cells()) total += (c.s1 - c.s0) * (c.u1 - c.u0) * std::pow(c.value, p);
  return total;
}

/// mu(f^p g^q) over the region, p, q >= 1.
inline double mu_product(const StepFunction& f, int p, const StepFunction& g, int q, const Region& r) {
  double total = 0.0;
  const auto fc = f.clipped(r);
  const auto gc = g.clipped(r);
  for (const auto& a : fc.cells()) {
    for (const auto& b : gc.cells()) {
      total += detail::overlap_area(a, b) * std::pow(a.value, p) * std::pow(b.value, q);
    }
  }
  return total;
}

/// Poisson(T*B) many i.i.d. uniform points on the region.
inline std::vector<Point> sample_prm(const Region& region, RandomStream& rng) {
  const auto n = rng.poisson(region.mass());
  std::vector<Point> pts;
  pts.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const double s = region.T * rng.uniform();
    pts.push_back({s, region.B * rng.uniform()});
  }
  return pts;
}

/// Sum of f over the points minus mu(f).
inline double compensated_integral(const std::vector<Point>& points, const StepFunction& f, const Region& region) {
  double sum = 0.0;
  for (const auto& p : points) sum += f(p);
  return sum - mu_power(f, 1, region);
}

struct AnalyticMoments {
  double second;  // E[Qbar(f)^2]
  double fourth;  // E[Qbar(f)^4]
  double mixed;   // E[Qbar(f)^2 Qbar(g)^2]
};

inline AnalyticMoments analytic_moments(const StepFunction& f, const StepFunction& g, const Region& region) {
  const double f2 = mu_power(f, 2, region);
  const double g2 = mu_power(g, 2, region);
  const double fg = mu_product(f, 1, g, 1, region);
  return {f2, mu_power(f, 4, region) + 3.0 * f2 * f2, mu_product(f, 2, g, 2, region) + f2 * g2 + 2.0 * fg * fg};
}

/// exp(mu(e^{if} - if - 1)).
inline std::complex<double> analytic_characteristic(const StepFunction& f, const Region& region) {
  std::complex<double> expo = 0.0;
  const auto fc = f.clipped(region);
  for (const auto& c : fc.cells()) {
    const double area = (c.s1 - c.s0) * (c.u1 - c.u0);
    expo += area * (std::complex<double>(std::cos(c.value) - 1.0, std::sin(c.value) - c.value));
  }
  return std::exp(expo);
}

struct IdentityCheck {
  std::string identity;
  double analytic = 0.0;
  double empirical = 0.0;
  double se = 0.0;
  double z = 0.0;
};

struct IdentityReport {
  std::vector<IdentityCheck> checks;
  std::size_t n_samples = 0;

  [[nodiscard]] bool all_within(double z_max) const noexcept {
    return std::all_of(checks.begin(), checks.end(), [z_max](const auto& c) { return std::fabs(c.z) <= z_max; });
  }
};

namespace detail {
struct Sums {
  std::size_t n = 0;
  std::vector<double> s1, s2;
  void add(std::size_t k, double v) {
    s1[k] += v;
    s2[k] += v * v;
  }
};

inline IdentityCheck finish(std::string name, double analytic, double s1, double s2, std::size_t n) {
  const double nn = static_cast<double>(n);
  const double mean = s1 / nn;
  const double var = std::max(0.0, (s2 - nn * mean * mean) / (nn - 1.0));
  const double se = std::sqrt(var / nn);
  return {std::move(name), analytic, mean, se, se > 0.0 ? (mean - analytic) / se : (mean == analytic ? 0.0 : INFINITY)};
}

// Empirical sums of the given per-sample statistics, deterministic for any thread count.
template <class Stat>
Sums sample_sums(std::size_t n_samples, std::size_t n_stats, const Region& region, StreamKey key, unsigned threads,
                 Stat&& stat) {
  auto parts = parallel_chunks(n_samples, 4096, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    Sums s{0, std::vector<double>(n_stats), std::vector<double>(n_stats)};
    std::vector<double> vals(n_stats);
    for (std::size_t i = begin; i < end; ++i) {
      RandomStream rng(key.child(i));
      const auto pts = sample_prm(region, rng);
      stat(pts, vals);
      for (std::size_t k = 0; k < n_stats; ++k) s.add(k, vals[k]);
    }
    s.n = end - begin;
    return s;
  });
  Sums total{0, std::vector<double>(n_stats), std::vector<double>(n_stats)};
  for (const auto& p : parts) {
    total.n += p.n;
    for (std::size_t k = 0; k < n_stats; ++k) {
      total.s1[k] += p.s1[k];
      total.s2[k] += p.s2[k];
    }
  }
  return total;
}
}  // namespace detail

/// Empirical versus analytic second, fourth and mixed moments of the compensated integrals.
inline IdentityReport verify_identities(const StepFunction& f, const StepFunction& g, const Region& region,
                                        std::size_t n_samples, StreamKey key, unsigned threads = 1) {
  if (n_samples < 2) throw ConfigError("verify_identities needs at least two samples");
  const auto an = analytic_moments(f, g, region);
  const auto sums = detail::sample_sums(n_samples, 3, region, key, threads,
                                        [&](const std::vector<Point>& pts, std::vector<double>& out) {
                                          const double qf = compensated_integral(pts, f, region);
                                          const double qg = compensated_integral(pts, g, region);
                                          out[0] = qf * qf;
                                          out[1] = qf * qf * qf * qf;
                                          out[2] = qf * qf * qg * qg;
                                        });
  IdentityReport rep;
  rep.n_samples = n_samples;
  rep.checks.push_back(detail::finish("E[Qbar(f)^2] = mu(f^2)", an.second, sums.s1[0], sums.s2[0], sums.n));
  rep.checks.push_back(detail::finish("E[Qbar(f)^4] = mu(f^4) + 3 mu(f^2)^2", an.fourth, sums.s1[1], sums.s2[1], sums.n));
  rep.checks.push_back(detail::finish("E[Qbar(f)^2 Qbar(g)^2] = mu(f^2 g^2) + mu(f^2) mu(g^2) + 2 mu(fg)^2", an.mixed,
                                      sums.s1[2], sums.s2[2], sums.n));
  return rep;
}

/// Real and imaginary parts of E[exp(i Qbar(f))], empirical against analytic.
inline IdentityReport verify_characteristic(const StepFunction& f, const Region& region, std::size_t n_samples,
                                            StreamKey key, unsigned threads = 1) {
  const auto an = analytic_characteristic(f, region);
  const auto sums = detail::sample_sums(n_samples, 2, region, key, threads,
                                        [&](const std::vector<Point>& pts, std::vector<double>& out) {
                                          const double q = compensated_integral(pts, f, region);
                                          out[0] = std::cos(q);
                                          out[1] = std::sin(q);
                                        });
  IdentityReport rep;
  rep.n_samples = n_samples;
  rep.checks.push_back(detail::finish("Re E[exp(i Qbar(f))]", an.real(), sums.s1[0], sums.s2[0], sums.n));
  rep.checks.push_back(detail::finish("Im E[exp(i Qbar(f))]", an.imag(), sums.s1[1], sums.s2[1], sums.n));
  return rep;
}

inline nlohmann::ordered_json to_json(const IdentityReport& r) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : r.checks) {
    arr.push_back({{"identity", c.identity}, {"analytic", c.analytic}, {"empirical", c.empirical}, {"se", c.se}, {"z", c.z}});
  }
  return arr;
}

}  // namespace cmj::prm
