// Copyright 2026 The cmj Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Event-driven simulation of single-ancestor trees and of populations of
// floor(N x) independent trees.
//
// Individuals of a tree are numbered in breadth-first order (the ancestor is
// 0) and individual i draws all of its randomness from tree_key.child(i), so a
// tree depends only on its key.
//
// Z(t) counts individuals alive on [birth, birth + eta): births are counted at
// their instant, deaths remove the individual at theirs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <span>
#include <vector>

#include "cmj/error.hpp"
#include "cmj/grid.hpp"
#include "cmj/model.hpp"
#include "cmj/parallel.hpp"
#include "cmj/random.hpp"

namespace cmj {

inline constexpr std::size_t kDefaultIndividualCap = 10'000'000;

struct Event {
  double time;
  std::int64_t delta;  // +L at a birth event, -1 at a death
};

struct TreeResult {
  std::vector<Event> events;  // sorted by time
  IndividualDraw ancestor;
  std::size_t total_individuals = 0;
  bool truncated = false;
};

/// Calls on_birth(age) for every point of an inhomogeneous Poisson process with
/// intensity b(s) on [0, window], by thinning a rate-b_max homogeneous process.
/// on_birth may draw from rng; its draws interleave with the thinning draws.
template <class OnBirth>
void for_each_birth(const BirthRateSpec& spec, const IndividualDraw& draw, double window, RandomStream& rng,
                    OnBirth&& on_birth) {
  const double limit = std::min(window, draw.gate);
  if (!(draw.b_max > 0.0) || !(limit > 0.0)) return;
  double s = 0.0;
  for (;;) {
    s += rng.exponential(draw.b_max);
    if (s > limit) return;
    const double r = draw.rate(spec, s);
    if (r >= draw.b_max || rng.uniform() * draw.b_max < r) {
      if (!on_birth(s)) return;
    }
  }
}

/// Birth ages of one individual on [0, window].
inline std::vector<double> birth_times_by_thinning(const BirthRateSpec& spec, const IndividualDraw& draw, double window,
                                                   RandomStream& rng) {
  std::vector<double> out;
  for_each_birth(spec, draw, window, rng, [&](double s) {
    out.push_back(s);
    return true;
  });
  return out;
}

/// Adds the alive count Z(t_i) for each grid node into out (which must have grid.size() slots).
/// Events need not be sorted.
inline void alive_on_grid(std::span<const Event> events, const TimeGrid& grid, std::span<std::int64_t> out) {
  std::fill(out.begin(), out.end(), 0);
  out[0] = 1;
  for (const auto& e : events) {
    const std::size_t i = grid.first_at_or_after(e.time);
    if (i < grid.size()) out[i] += e.delta;
  }
  for (std::size_t i = 1; i < out.size(); ++i) out[i] += out[i - 1];
}

inline std::vector<std::int64_t> alive_on_grid(const TreeResult& tree, const TimeGrid& grid) {
  std::vector<std::int64_t> z(grid.size());
  alive_on_grid(tree.events, grid, z);
  return z;
}

/// Reusable single-tree simulator; keeps its buffers between runs.
class TreeSimulator {
 public:
  explicit TreeSimulator(const ModelSpec& model, std::size_t cap = kDefaultIndividualCap)
      : model_(&model), cap_(cap) {}

  /// Simulates one tree on [0, horizon]. Check truncated() afterwards.
  void run(StreamKey key, double horizon) {
    events_.clear();
    births_.clear();
    births_.push_back(0.0);
    truncated_ = false;
    const auto& model = *model_;
    for (std::size_t i = 0; i < births_.size(); ++i) {
      RandomStream rng(key.child(i));
      const IndividualDraw draw = sample_individual(model, rng);
      if (i == 0) ancestor_ = draw;
      const double t0 = births_[i];
      if (t0 + draw.eta <= horizon) events_.push_back({t0 + draw.eta, -1});
      for_each_birth(model.birthrate, draw, horizon - t0, rng, [&](double age) {
        const double t = t0 + age;
        const auto litter = model.offspring.sample(rng);
        events_.push_back({t, static_cast<std::int64_t>(litter)});
        if (births_.size() + litter > cap_) {
          truncated_ = true;
          return false;
        }
        births_.insert(births_.end(), litter, t);
        return true;
      });
      if (truncated_) break;
    }
  }

  [[nodiscard]] std::span<const Event> events() const noexcept { return events_; }
  [[nodiscard]] const IndividualDraw& ancestor() const noexcept { return ancestor_; }
  [[nodiscard]] std::size_t total_individuals() const noexcept { return births_.size(); }
  [[nodiscard]] bool truncated() const noexcept { return truncated_; }

  void alive_on_grid(const TimeGrid& grid, std::span<std::int64_t> out) const {
    cmj::alive_on_grid(events_, grid, out);
  }

  [[nodiscard]] TreeResult result() const {
    TreeResult r{events_, ancestor_, births_.size(), truncated_};
    std::stable_sort(r.events.begin(), r.events.end(), [](const Event& a, const Event& b) { return a.time < b.time; });
    return r;
  }

 private:
  const ModelSpec* model_;
  std::size_t cap_;
  std::vector<Event> events_;
  std::vector<double> births_;
  IndividualDraw ancestor_;
  bool truncated_ = false;
};

inline TreeResult simulate_tree(const ModelSpec& model, double horizon, StreamKey key,
                                std::size_t cap = kDefaultIndividualCap) {
  TreeSimulator sim(model, cap);
  sim.run(key, horizon);
  return sim.result();
}

// ---------------------------------------------------------------------------
// Populations

/// floor(N x), robust to representation error in the product.
inline std::size_t ancestor_count(std::size_t N, double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError("x must be positive");
  const double nx = static_cast<double>(N) * x;
  double n = std::floor(nx);
  if (nx - n > 1.0 - 1e-9 * std::max(1.0, nx)) n += 1.0;
  return static_cast<std::size_t>(n);
}

struct AncestorRecord {
  IndividualDraw draw;
  std::vector<std::int64_t> Z;
};

struct PopulationResult {
  TimeGrid grid;
  std::vector<double> X;
  std::vector<AncestorRecord> ancestors;
  std::size_t N = 0;
  double x = 0.0;
};

/// floor(N x) independent trees, tree k keyed by key.child(k). Throws TruncationError.
inline PopulationResult simulate_population(const ModelSpec& model, std::size_t N, double x, const TimeGrid& grid,
                                            StreamKey key, std::size_t cap = kDefaultIndividualCap,
                                            unsigned threads = 1) {
  const std::size_t n = ancestor_count(N, x);
  if (n < 1) throw ConfigError("floor(N x) must be at least 1");
  if (grid.last() > model.horizon * (1 + 1e-12)) throw ConfigError("population grid exceeds the model horizon");
  PopulationResult pop;
  pop.grid = grid;
  pop.N = N;
  pop.x = x;
  pop.ancestors.resize(n);
  const double horizon = grid.last();
  parallel_chunks(n, 64, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    TreeSimulator sim(model, cap);
    for (std::size_t k = begin; k < end; ++k) {
      sim.run(key.child(k), horizon);
      if (sim.truncated()) throw TruncationError("tree exceeded the individual cap");
      auto& rec = pop.ancestors[k];
      rec.draw = sim.ancestor();
      rec.Z.resize(grid.size());
      sim.alive_on_grid(grid, rec.Z);
    }
    return 0;
  });
  std::vector<std::int64_t> total(grid.size(), 0);
  for (const auto& a : pop.ancestors) {
    for (std::size_t i = 0; i < grid.size(); ++i) total[i] += a.Z[i];
  }
  pop.X.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) pop.X[i] = static_cast<double>(total[i]) / static_cast<double>(N);
  return pop;
}

// ---------------------------------------------------------------------------
// Monte-Carlo moments of single-ancestor trees

/// Empirical E[Z(t_i)^p] for p = 1, 2, 4 with standard errors.
struct ZMomentTable {
  TimeGrid grid;
  std::size_t K = 0;
  std::vector<double> m1, m2, m4;
  std::vector<double> se1, se2, se4;
};

inline ZMomentTable moments_Z(const ModelSpec& model, const TimeGrid& grid, std::size_t K, StreamKey key,
                              std::size_t cap = kDefaultIndividualCap, unsigned threads = 1) {
  if (K < 2) throw ConfigError("need at least two replicates");
  const std::size_t n = grid.size();
  struct Part {
    std::vector<double> s[6];  // sums of Z, Z^2, Z^4 and of their squares
  };
  auto parts = parallel_chunks(K, 512, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    Part p;
    for (auto& v : p.s) v.assign(n, 0.0);
    TreeSimulator sim(model, cap);
    std::vector<std::int64_t> z(n);
    for (std::size_t k = begin; k < end; ++k) {
      sim.run(key.child(k), grid.last());
      if (sim.truncated()) throw TruncationError("tree exceeded the individual cap");
      sim.alive_on_grid(grid, z);
      for (std::size_t i = 0; i < n; ++i) {
        const double v = static_cast<double>(z[i]);
        const double v2 = v * v;
        const double v4 = v2 * v2;
        p.s[0][i] += v;
        p.s[1][i] += v2;
        p.s[2][i] += v4;
        p.s[3][i] += v2;
        p.s[4][i] += v4;
        p.s[5][i] += v4 * v4;
      }
    }
    return p;
  });
  std::vector<double> s[6];
  for (auto& v : s) v.assign(n, 0.0);
  for (const auto& p : parts) {
    for (int j = 0; j < 6; ++j) {
      for (std::size_t i = 0; i < n; ++i) s[j][i] += p.s[j][i];
    }
  }
  const double kk = static_cast<double>(K);
  auto mean_se = [kk](double sum, double sumsq, double& mean, double& se) {
    mean = sum / kk;
    se = std::sqrt(std::max(0.0, (sumsq / kk - mean * mean) / (kk - 1.0)));
  };
  ZMomentTable t;
  t.grid = grid;
  t.K = K;
  t.m1.resize(n), t.m2.resize(n), t.m4.resize(n), t.se1.resize(n), t.se2.resize(n), t.se4.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    mean_se(s[0][i], s[3][i], t.m1[i], t.se1[i]);
    mean_se(s[1][i], s[4][i], t.m2[i], t.se2[i]);
    mean_se(s[2][i], s[5][i], t.m4[i], t.se4[i]);
  }
  return t;
}

/// Empirical m2(t_i, t_j) = E[Z(t_i) Z(t_j)] with standard errors (row-major n x n).
struct MixedMoments {
  TimeGrid grid;
  std::size_t K = 0;
  std::vector<double> mean;
  std::vector<double> se;

  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const noexcept { return mean[i * grid.size() + j]; }
  [[nodiscard]] double se_at(std::size_t i, std::size_t j) const noexcept { return se[i * grid.size() + j]; }

  /// m2(i,j)^2 <= m2(i,i) m2(j,j) for every pair.
  [[nodiscard]] bool cauchy_schwarz_ok() const noexcept {
    const std::size_t n = grid.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double v = (*this)(i, j);
        if (v * v > (*this)(i, i) * (*this)(j, j) * (1 + 1e-12)) return false;
      }
    }
    return true;
  }
};

/// Integer accumulation makes the result independent of the merge order.
inline MixedMoments mixed_moment_Z(const ModelSpec& model, const TimeGrid& grid, std::size_t K, StreamKey key,
                                   std::size_t cap = kDefaultIndividualCap, unsigned threads = 1) {
  if (K < 1000) throw ConfigError("mixed moments need K >= 1000 replicates");
  const std::size_t n = grid.size();
  const std::size_t n_pairs = n * (n + 1) / 2;
  std::vector<std::int64_t> sum(n_pairs, 0);
  std::vector<__int128> sumsq(n_pairs, 0);
  std::mutex merge;
  parallel_chunks(K, 512, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<std::int64_t> ls(n_pairs, 0);
    std::vector<__int128> lq(n_pairs, 0);
    TreeSimulator sim(model, cap);
    std::vector<std::int64_t> z(n);
    for (std::size_t k = begin; k < end; ++k) {
      sim.run(key.child(k), grid.last());
      if (sim.truncated()) throw TruncationError("tree exceeded the individual cap");
      sim.alive_on_grid(grid, z);
      std::size_t idx = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::int64_t zi = z[i];
        if (zi == 0) {
          idx += n - i;
          continue;
        }
        for (std::size_t j = i; j < n; ++j, ++idx) {
          const std::int64_t p = zi * z[j];
          ls[idx] += p;
          lq[idx] += static_cast<__int128>(p) * p;
        }
      }
    }
    std::lock_guard lock(merge);
    for (std::size_t q = 0; q < n_pairs; ++q) {
      sum[q] += ls[q];
      sumsq[q] += lq[q];
    }
    return 0;
  });
  MixedMoments m;
  m.grid = grid;
  m.K = K;
  m.mean.assign(n * n, 0.0);
  m.se.assign(n * n, 0.0);
  const double kk = static_cast<double>(K);
  std::size_t idx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j, ++idx) {
      const double mean = static_cast<double>(sum[idx]) / kk;
      const double msq = static_cast<double>(sumsq[idx]) / kk;
      const double se = std::sqrt(std::max(0.0, (msq - mean * mean) / (kk - 1.0)));
      m.mean[i * n + j] = m.mean[j * n + i] = mean;
      m.se[i * n + j] = m.se[j * n + i] = se;
    }
  }
  return m;
}

}  // namespace cmj
