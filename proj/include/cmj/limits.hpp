// Copyright 2026 The cmj Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Fluctuation process R^{N,x} = sqrt(N) (X^{N,x} - x M1) and its decomposition
//   R = sqrt(n / N) (U1 + U2 + U3) + eps,     n = floor(N x),
//   U1 = n^{-1/2} sum_k (1{eta_k > t} - F^c(t))
//   U2 = n^{-1/2} sum_k int_0^t Lbar M1(t - s) (b_k(s) - bbar(s)) ds
//   U3 = n^{-1/2} sum_k (Z_k(t) - 1{eta_k > t} - int_0^t Lbar M1(t - s) b_k(s) ds)
//   eps = (n - N x) / sqrt(N) * M1(t)
// and the law-of-large-numbers, central-limit and increment-moment experiments.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cmj/covariance.hpp"
#include "cmj/error.hpp"
#include "cmj/grid.hpp"
#include "cmj/model.hpp"
#include "cmj/parallel.hpp"
#include "cmj/simulate.hpp"
#include "cmj/stats.hpp"
#include "cmj/volterra.hpp"

namespace cmj {

struct FluctuationSample {
  std::vector<double> times;
  std::vector<double> R, U1, U2, U3, eps;
  double scale = 1.0;  // sqrt(n / N)

  /// max_i |R - (scale (U1 + U2 + U3) + eps)|.
  [[nodiscard]] double identity_error() const noexcept {
    double e = 0.0;
    for (std::size_t i = 0; i < R.size(); ++i) {
      e = std::max(e, std::fabs(R[i] - (scale * (U1[i] + U2[i] + U3[i]) + eps[i])));
    }
    return e;
  }
};

/// Maps a population grid onto the mean-solution grid and precomputes one
/// path convolver per population node.
class Decomposer {
 public:
  Decomposer(const ModelSpec& model, const MeanSolution& m1, const TimeGrid& pop_grid) : model_(&model), m1_(&m1) {
    nodes_.reserve(pop_grid.size());
    for (std::size_t p = 0; p < pop_grid.size(); ++p) {
      const auto i = m1.grid().index_of(pop_grid.time(p));
      if (!i) throw ConfigError("grid mismatch: population time is not a node of the mean-solution grid");
      nodes_.push_back(*i);
      convolvers_.emplace_back(m1, model.birthrate, *i);
    }
    grid_ = pop_grid;
  }

  [[nodiscard]] const TimeGrid& grid() const noexcept { return grid_; }

  [[nodiscard]] FluctuationSample operator()(const PopulationResult& pop) const {
    if (!(pop.grid == grid_)) throw ConfigError("grid mismatch between population and decomposer");
    const auto& m1 = *m1_;
    const std::size_t n = pop.ancestors.size();
    const double N = static_cast<double>(pop.N);
    const double rn = std::sqrt(static_cast<double>(n));
    FluctuationSample f;
    f.times = grid_.times();
    f.scale = std::sqrt(static_cast<double>(n) / N);
    const std::size_t m = grid_.size();
    f.R.resize(m), f.U1.resize(m), f.U2.resize(m), f.U3.resize(m), f.eps.resize(m);
    for (std::size_t p = 0; p < m; ++p) {
      const std::size_t i = nodes_[p];
      const double t = grid_.time(p);
      const double surv = m1.survival()[i];
      const double conv_bar = m1[i] - surv;
      double u1 = 0.0, u2 = 0.0, u3 = 0.0;
      for (const auto& a : pop.ancestors) {
        const double alive = a.draw.eta > t ? 1.0 : 0.0;
        const double conv = convolvers_[p](a.draw);
        u1 += alive - surv;
        u2 += conv - conv_bar;
        u3 += static_cast<double>(a.Z[p]) - alive - conv;
      }
      f.U1[p] = u1 / rn;
      f.U2[p] = u2 / rn;
      f.U3[p] = u3 / rn;
      f.R[p] = std::sqrt(N) * (pop.X[p] - pop.x * m1[i]);
      f.eps[p] = (static_cast<double>(n) - N * pop.x) / std::sqrt(N) * m1[i];
    }
    return f;
  }

 private:
  const ModelSpec* model_;
  const MeanSolution* m1_;
  TimeGrid grid_;
  std::vector<std::size_t> nodes_;
  std::vector<PathConvolver> convolvers_;
};

inline FluctuationSample compute_decomposition(const ModelSpec& model, const PopulationResult& pop,
                                               const MeanSolution& m1) {
  return Decomposer(model, m1, pop.grid)(pop);
}

// ---------------------------------------------------------------------------
// Law of large numbers

struct LlnRow {
  std::size_t N;
  std::size_t replicate;
  double sup_error;
};

struct LlnTable {
  std::vector<std::size_t> ladder;
  std::vector<LlnRow> rows;
  std::vector<double> medians;  // per ladder entry

  [[nodiscard]] bool medians_strictly_decreasing() const noexcept {
    for (std::size_t i = 1; i < medians.size(); ++i) {
      if (!(medians[i] < medians[i - 1])) return false;
    }
    return true;
  }
  /// medians.back() / medians.front().
  [[nodiscard]] double decay_ratio() const noexcept { return medians.back() / medians.front(); }
};

/// sup_i |X^{N,x}(t_i) - x M1(t_i)| for each N and replicate; replicate r of entry
/// N uses key.child({N, r}).
inline LlnTable lln_experiment(const ModelSpec& model, const MeanSolution& m1, double x,
                               const std::vector<std::size_t>& ladder, const TimeGrid& grid, StreamKey key,
                               std::size_t replicates = 5, std::size_t cap = kDefaultIndividualCap,
                               unsigned threads = 1) {
  if (ladder.empty() || replicates == 0) throw ConfigError("lln experiment needs a ladder and replicates");
  model.validate();
  std::vector<std::size_t> nodes(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto i = m1.grid().index_of(grid.time(p));
    if (!i) throw ConfigError("grid mismatch: lln grid is not a subgrid of the mean-solution grid");
    nodes[p] = *i;
  }
  LlnTable t;
  t.ladder = ladder;
  for (std::size_t N : ladder) {
    std::vector<double> errs;
    for (std::size_t r = 0; r < replicates; ++r) {
      const auto pop = simulate_population(model, N, x, grid, key.child({N, r}), cap, threads);
      double e = 0.0;
      for (std::size_t p = 0; p < grid.size(); ++p) e = std::max(e, std::fabs(pop.X[p] - x * m1[nodes[p]]));
      t.rows.push_back({N, r, e});
      errs.push_back(e);
    }
    t.medians.push_back(stats::median(errs));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Central limit theorem

/// Per-replicate values at the evaluation times (t = 0 excluded), row-major M x m.
struct CltSamples {
  std::vector<double> times;
  std::size_t M = 0;
  std::vector<double> R, U1, U2, U3;
  double max_identity_error = 0.0;

  [[nodiscard]] std::vector<double> column(const std::vector<double>& v, std::size_t p) const {
    std::vector<double> out(M);
    const std::size_t m = times.size();
    for (std::size_t r = 0; r < M; ++r) out[r] = v[r * m + p];
    return out;
  }
};

inline CltSamples clt_samples(const ModelSpec& model, const MeanSolution& m1, double x, std::size_t N, std::size_t M,
                              const TimeGrid& grid, StreamKey key, std::size_t cap = kDefaultIndividualCap,
                              unsigned threads = 1) {
  model.require_clt();
  if (M < 4) throw ConfigError("clt experiment needs at least four replicates");
  const Decomposer dec(model, m1, grid);
  CltSamples s;
  for (std::size_t p = 1; p < grid.size(); ++p) s.times.push_back(grid.time(p));
  const std::size_t m = s.times.size();
  s.M = M;
  s.R.resize(M * m), s.U1.resize(M * m), s.U2.resize(M * m), s.U3.resize(M * m);
  auto errs = parallel_chunks(M, 4, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    double e = 0.0;
    for (std::size_t r = begin; r < end; ++r) {
      const auto pop = simulate_population(model, N, x, grid, key.child(r), cap, 1);
      const auto f = dec(pop);
      e = std::max(e, f.identity_error());
      for (std::size_t p = 0; p < m; ++p) {
        s.R[r * m + p] = f.R[p + 1];
        s.U1[r * m + p] = f.U1[p + 1];
        s.U2[r * m + p] = f.U2[p + 1];
        s.U3[r * m + p] = f.U3[p + 1];
      }
    }
    return e;
  });
  for (double e : errs) s.max_identity_error = std::max(s.max_identity_error, e);
  return s;
}

struct CltStatistics {
  std::vector<double> times;
  std::size_t M = 0;
  std::vector<std::vector<stats::Estimate>> cov_R;     // [t][s]
  std::vector<std::vector<stats::Estimate>> corr_U1U3;  // corr(U1(t), U3(s))
  std::vector<std::vector<stats::Estimate>> corr_U2U3;  // corr(U2(t), U3(s))
  std::vector<stats::Estimate> skewness, excess_kurtosis;
  std::vector<stats::Estimate> mean_U1, mean_U2, mean_U3;
  std::vector<stats::Estimate> var_U1;
  double max_identity_error = 0.0;
};

inline CltStatistics clt_statistics(const CltSamples& s) {
  const std::size_t m = s.times.size();
  CltStatistics st;
  st.times = s.times;
  st.M = s.M;
  st.max_identity_error = s.max_identity_error;
  std::vector<std::vector<double>> R(m), U1(m), U2(m), U3(m);
  for (std::size_t p = 0; p < m; ++p) {
    R[p] = s.column(s.R, p);
    U1[p] = s.column(s.U1, p);
    U2[p] = s.column(s.U2, p);
    U3[p] = s.column(s.U3, p);
  }
  auto square = [m] { return std::vector<std::vector<stats::Estimate>>(m, std::vector<stats::Estimate>(m)); };
  st.cov_R = square();
  st.corr_U1U3 = square();
  st.corr_U2U3 = square();
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      st.cov_R[a][b] = b < a ? st.cov_R[b][a] : stats::covariance(R[a], R[b]);
      st.corr_U1U3[a][b] = stats::correlation(U1[a], U3[b]);
      // U2 vanishes identically when the birth-rate path is deterministic.
      const bool degenerate = std::all_of(U2[a].begin(), U2[a].end(), [&](double v) { return v == U2[a][0]; });
      st.corr_U2U3[a][b] = degenerate ? stats::Estimate{0.0, 0.0} : stats::correlation(U2[a], U3[b]);
    }
    st.skewness.push_back(stats::skewness(R[a]));
    st.excess_kurtosis.push_back(stats::excess_kurtosis(R[a]));
    st.mean_U1.push_back(stats::mean_se(U1[a]));
    st.mean_U2.push_back(stats::mean_se(U2[a]));
    st.mean_U3.push_back(stats::mean_se(U3[a]));
    st.var_U1.push_back(stats::covariance(U1[a], U1[a]));
  }
  return st;
}

/// One entry of the empirical-versus-analytic covariance comparison.
struct CovarianceCheck {
  double t, s;
  double empirical, se;
  double analytic, analytic_se;
  double tolerance;
  bool pass;

  [[nodiscard]] double z() const noexcept { return se > 0.0 ? (empirical - analytic) / se : 0.0; }
};

/// |empirical - analytic| <= max(z_max * jackknife SE, rel_tol * |analytic|) for every entry.
inline std::vector<CovarianceCheck> compare_covariance(const CltStatistics& st, const CovarianceReport& rep,
                                                       double z_max = 4.0, double rel_tol = 0.05) {
  if (st.times != rep.times) throw ConfigError("covariance report and statistics use different times");
  std::vector<CovarianceCheck> out;
  const std::size_t m = st.times.size();
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a; b < m; ++b) {
      const auto& e = st.cov_R[a][b];
      const auto i = static_cast<Eigen::Index>(a), j = static_cast<Eigen::Index>(b);
      const double an = rep.cr(i, j);
      const double tol = std::max(z_max * e.se, rel_tol * std::fabs(an));
      out.push_back({st.times[a], st.times[b], e.value, e.se, an, rep.cr_se(i, j), tol,
                     std::fabs(e.value - an) <= tol});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Increment moments of the single-ancestor compensated term U

struct IncrementRow {
  double s, v, t;  // v unused for pairs
  double mean, se;
  double ratio, ratio_se;
};

struct HolderTables {
  double alpha = 1.0;
  double beta = 1.5;
  std::size_t K = 0;
  std::vector<IncrementRow> pairs;    // E|U(t) - U(s)|^2 / (t - s)
  std::vector<IncrementRow> triples;  // E[|U(t)-U(v)|^2 |U(v)-U(s)|^2] / (t - s)^beta
  stats::LinearFit pair_trend, triple_trend;  // log ratio against log(1 / (t - s))
  bool pairs_all_zero = false, triples_all_zero = false;

  /// No growth of the ratios as t - s shrinks beyond the given log-log slope.
  [[nodiscard]] bool bounded(double max_slope = 0.1) const noexcept {
    const bool a = pairs_all_zero || pair_trend.slope <= max_slope;
    const bool b = triples_all_zero || triple_trend.slope <= max_slope;
    return a && b;
  }
};

/// Increments sizes d: n_points log-spaced in [d_min, d_max], rounded to multiples of 2h.
/// Pairs and triples are centered at T / 2: s = T/2 - d/2, v = T/2, t = T/2 + d/2.
inline HolderTables holder_diagnostics(const ModelSpec& model, const MeanSolution& m1, std::size_t K, StreamKey key,
                                       std::size_t n_points = 20, double d_min = 0.05, double d_max = 1.0,
                                       std::size_t cap = kDefaultIndividualCap, unsigned threads = 1) {
  if (K < 2) throw ConfigError("holder diagnostics need at least two replicates");
  const auto& g = m1.grid();
  const double h = g.step();
  const double T = g.last();
  d_max = std::min(d_max, T);
  if (!(d_min > 0.0 && d_min < d_max)) throw ConfigError("increment range must satisfy 0 < d_min < d_max <= T");

  // Node triples (s, v, t).
  const auto center = static_cast<std::int64_t>(std::llround(0.5 * T / h));
  std::vector<std::array<std::size_t, 3>> nodes;
  for (std::size_t k = 0; k < n_points; ++k) {
    const double frac = n_points == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(n_points - 1);
    const double d = d_min * std::pow(d_max / d_min, frac);
    auto half = std::max<std::int64_t>(1, std::llround(0.5 * d / h));
    half = std::min(half, center);
    nodes.push_back({static_cast<std::size_t>(center - half), static_cast<std::size_t>(center),
                     static_cast<std::size_t>(center + half)});
  }
  std::vector<std::size_t> needed;
  for (const auto& n : nodes) needed.insert(needed.end(), n.begin(), n.end());
  std::sort(needed.begin(), needed.end());
  needed.erase(std::unique(needed.begin(), needed.end()), needed.end());
  if (needed.back() >= g.size()) throw ConfigError("increment nodes exceed the mean-solution grid");
  std::vector<PathConvolver> conv;
  for (auto i : needed) conv.emplace_back(m1, model.birthrate, i);
  auto pos = [&](std::size_t node) {
    return static_cast<std::size_t>(std::lower_bound(needed.begin(), needed.end(), node) - needed.begin());
  };

  const std::size_t np = nodes.size();
  struct Part {
    std::vector<double> p1, p2, q1, q2;
  };
  const TimeGrid sim_grid(h, needed.back() + 1);
  auto parts = parallel_chunks(K, 256, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    Part part{std::vector<double>(np), std::vector<double>(np), std::vector<double>(np), std::vector<double>(np)};
    TreeSimulator sim(model, cap);
    std::vector<std::int64_t> z(sim_grid.size());
    std::vector<double> u(needed.size());
    for (std::size_t k = begin; k < end; ++k) {
      sim.run(key.child(k), sim_grid.last());
      if (sim.truncated()) throw TruncationError("tree exceeded the individual cap");
      sim.alive_on_grid(sim_grid, z);
      const auto& d = sim.ancestor();
      for (std::size_t q = 0; q < needed.size(); ++q) {
        const double t = g.time(needed[q]);
        u[q] = static_cast<double>(z[needed[q]]) - (d.eta > t ? 1.0 : 0.0) - conv[q](d);
      }
      for (std::size_t j = 0; j < np; ++j) {
        const double us = u[pos(nodes[j][0])], uv = u[pos(nodes[j][1])], ut = u[pos(nodes[j][2])];
        const double a = (ut - us) * (ut - us);
        const double b = (ut - uv) * (ut - uv) * (uv - us) * (uv - us);
        part.p1[j] += a, part.p2[j] += a * a, part.q1[j] += b, part.q2[j] += b * b;
      }
    }
    return part;
  });
  Part tot{std::vector<double>(np), std::vector<double>(np), std::vector<double>(np), std::vector<double>(np)};
  for (const auto& p : parts) {
    for (std::size_t j = 0; j < np; ++j) {
      tot.p1[j] += p.p1[j], tot.p2[j] += p.p2[j], tot.q1[j] += p.q1[j], tot.q2[j] += p.q2[j];
    }
  }

  HolderTables out;
  out.K = K;
  out.alpha = model.lifetime.holder_exponent();
  out.beta = 1.0 + out.alpha / 2.0;
  const double kk = static_cast<double>(K);
  auto mean_se = [kk](double s1, double s2) {
    const double m = s1 / kk;
    return stats::Estimate{m, std::sqrt(std::max(0.0, (s2 / kk - m * m) / (kk - 1.0)))};
  };
  std::vector<double> lx, ly_pair, ly_triple;
  for (std::size_t j = 0; j < np; ++j) {
    const double s = g.time(nodes[j][0]), v = g.time(nodes[j][1]), t = g.time(nodes[j][2]);
    const double d = t - s;
    const auto a = mean_se(tot.p1[j], tot.p2[j]);
    const auto b = mean_se(tot.q1[j], tot.q2[j]);
    const double db = std::pow(d, out.beta);
    out.pairs.push_back({s, v, t, a.value, a.se, a.value / d, a.se / d});
    out.triples.push_back({s, v, t, b.value, b.se, b.value / db, b.se / db});
    lx.push_back(-std::log(d));
    ly_pair.push_back(std::log(a.value / d));
    ly_triple.push_back(std::log(b.value / db));
  }
  out.pairs_all_zero = std::all_of(out.pairs.begin(), out.pairs.end(), [](const auto& r) { return r.mean == 0.0; });
  out.triples_all_zero =
      std::all_of(out.triples.begin(), out.triples.end(), [](const auto& r) { return r.mean == 0.0; });
  if (!out.pairs_all_zero) out.pair_trend = stats::linear_fit(lx, ly_pair);
  if (!out.triples_all_zero) out.triple_trend = stats::linear_fit(lx, ly_triple);
  return out;
}

}  // namespace cmj
