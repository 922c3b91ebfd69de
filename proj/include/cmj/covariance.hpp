// Copyright 2026 The cmj Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Covariance structure of the Gaussian limit (U1, U2, U3) and of
// R^x = sqrt(x) (U1 + U2 + U3):
//
//   Cov(U1(t), U1(s)) = F^c(t v s) - F^c(t) F^c(s)
//   Cov(U2(t), U2(s)) = int_0^t int_0^s Lbar^2 M1(t-r) M1(s-u) Cov(b(r), b(u)) du dr
//   Cov(U3(t), U3(s)) = int_0^{t^s} bbar(r) { Lbar m2(t-r, s-r) + E[L^2-L] M1(t-r) M1(s-r) } dr
//   Cov(U1(t), U2(s)) = int_0^s Lbar M1(s-r) Cov(b(r), 1{eta > t}) dr
//   Cov(U1, U3) = Cov(U2, U3) = 0
//
// with m2(t, s) = E[Z(t) Z(s)] estimated by Monte Carlo. The Literal variant of
// Cov(U3) drops bbar(r) from the second summand.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cmj/error.hpp"
#include "cmj/grid.hpp"
#include "cmj/json_io.hpp"
#include "cmj/model.hpp"
#include "cmj/simulate.hpp"
#include "cmj/stats.hpp"
#include "cmj/volterra.hpp"

namespace cmj {

enum class CovU3Variant { Default, Literal };

inline std::string to_string(CovU3Variant v) { return v == CovU3Variant::Default ? "default" : "literal"; }

inline CovU3Variant covu3_variant_from_string(const std::string& s) {
  if (s == "default") return CovU3Variant::Default;
  if (s == "literal") return CovU3Variant::Literal;
  throw ConfigError("covu3_variant must be 'default' or 'literal'");
}

/// FNV-1a over the canonical JSON form of the model.
inline std::uint64_t model_hash(const ModelSpec& model) {
  const std::string s = to_json(model).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline double cov_u1(const ModelSpec& model, double t, double s) {
  const auto& lt = model.lifetime;
  return lt.survival(std::max(t, s)) - lt.survival(t) * lt.survival(s);
}

/// Node indices i, j on the mean-solution grid.
inline double cov_u2(const ModelSpec& model, const MeanSolution& m1, std::size_t i, std::size_t j) {
  return double_integral_covU2(m1, model, i, j);
}

/// Cov(U1(t_i), U2(t_j)) on the mean-solution grid.
inline double cov_u1u2(const ModelSpec& model, const MeanSolution& m1, std::size_t i, std::size_t j) {
  if (j == 0) return 0.0;
  const auto& g = m1.grid();
  const double h = g.step();
  const double t = g.time(i);
  double acc = 0.0;
  for (std::size_t a = 0; a <= j; ++a) {
    const double w = (a == 0 || a == j) ? 0.5 * h : h;
    acc += w * m1[j - a] * cov_birth_lifetime(model, g.time(a), t);
  }
  return m1.offspring_mean() * acc;
}

/// Cov(U3(t), U3(s)) with the Monte-Carlo standard error inherited from m2
/// (bounded by the triangle inequality). t and s must be nodes of both grids.
inline stats::Estimate cov_u3(const ModelSpec& model, const MeanSolution& m1, const MixedMoments& m2, double t,
                              double s, CovU3Variant variant = CovU3Variant::Default) {
  const auto om = model.offspring.moments();
  const double lo = std::min(t, s);
  if (lo <= 0.0) return {0.0, 0.0};

  // Lbar int bbar(r) m2(t-r, s-r) dr on the moment grid.
  const auto& mg = m2.grid;
  const std::size_t p = mg.require_index(t);
  const std::size_t q = mg.require_index(s);
  const std::size_t kmax = std::min(p, q);
  const double H = mg.step();
  double a = 0.0;
  double a_se = 0.0;
  for (std::size_t k = 0; k <= kmax; ++k) {
    const double w = (k == 0 || k == kmax) ? 0.5 * H : H;
    const double r = mg.time(k);
    const double b = k == kmax ? mean_birth_rate_left(model, r) : mean_birth_rate(model, r);
    a += w * b * m2(p - k, q - k);
    a_se += w * b * m2.se_at(p - k, q - k);
  }
  a *= om.mean;
  a_se *= om.mean;

  // E[L^2 - L] int c(r) M1(t-r) M1(s-r) dr on the fine grid; c = bbar or 1.
  const auto& g = m1.grid();
  const std::size_t i = g.require_index(t);
  const std::size_t j = g.require_index(s);
  const std::size_t amax = std::min(i, j);
  const double h = g.step();
  double c = 0.0;
  for (std::size_t k = 0; k <= amax; ++k) {
    const double r = g.time(k);
    double weight = 1.0;
    if (variant == CovU3Variant::Default) {
      if (k == 0) {
        weight = mean_birth_rate(model, r);
      } else if (k == amax) {
        weight = mean_birth_rate_left(model, r);
      } else {
        weight = 0.5 * (mean_birth_rate(model, r) + mean_birth_rate_left(model, r));
      }
    }
    const double w = (k == 0 || k == amax) ? 0.5 * h : h;
    c += w * weight * (m1[i - k] * m1[j - k]);
  }
  return {a + om.factorial2 * c, a_se};
}

using Matrix = Eigen::MatrixXd;

/// Smallest eigenvalue of a symmetric matrix.
inline double min_eigenvalue(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

struct CovarianceReport {
  std::vector<double> times;
  Matrix c1, c2, c3, c12, cr;
  Matrix c3_se, cr_se;  // Monte-Carlo error from m2
  double x = 1.0;
  CovU3Variant variant = CovU3Variant::Default;
  std::uint64_t model_hash = 0;
  double h = 0.0;
  double moment_step = 0.0;
  std::size_t K = 0;

  [[nodiscard]] bool symmetric() const {
    auto sym = [](const Matrix& m) { return (m - m.transpose()).cwiseAbs().maxCoeff() == 0.0; };
    return times.empty() || (sym(c1) && sym(c2) && sym(c3) && sym(cr));
  }
  [[nodiscard]] bool psd() const { return times.empty() || min_eigenvalue(cr) >= -1e-8 * cr.trace(); }
};

/// Analytic covariances on the given times (nodes of both the M1 and m2 grids).
inline CovarianceReport covariance_report(const ModelSpec& model, const MeanSolution& m1, const MixedMoments& m2,
                                          const std::vector<double>& times, double x,
                                          CovU3Variant variant = CovU3Variant::Default) {
  const auto n = static_cast<Eigen::Index>(times.size());
  CovarianceReport rep;
  rep.times = times;
  rep.x = x;
  rep.variant = variant;
  rep.model_hash = model_hash(model);
  rep.h = m1.step();
  rep.moment_step = m2.grid.step();
  rep.K = m2.K;
  for (Matrix* m : {&rep.c1, &rep.c2, &rep.c3, &rep.c12, &rep.cr, &rep.c3_se, &rep.cr_se}) *m = Matrix::Zero(n, n);

  const auto& g = m1.grid();
  std::vector<std::size_t> idx(times.size());
  std::size_t imax = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    idx[k] = g.require_index(times[k]);
    imax = std::max(imax, idx[k]);
  }
  // Cov(b(r), b(u)) on the nodes once, shared by every (t, s) pair.
  const std::size_t nt = imax + 1;
  std::vector<double> table(nt * nt);
  for (std::size_t a = 0; a < nt; ++a) {
    for (std::size_t b = a; b < nt; ++b) {
      table[a * nt + b] = table[b * nt + a] = cov_birth_rate(model, g.time(a), g.time(b));
    }
  }
  auto cov_b = [&](std::size_t a, std::size_t b) { return table[a * nt + b]; };

  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const double t = times[a], s = times[b];
      rep.c12(a, b) = cov_u1u2(model, m1, idx[a], idx[b]);
      if (b < a) continue;
      rep.c1(a, b) = rep.c1(b, a) = cov_u1(model, t, s);
      rep.c2(a, b) = rep.c2(b, a) = detail::covu2_sum(m1, idx[a], idx[b], cov_b);
      const auto u3 = cov_u3(model, m1, m2, t, s, variant);
      rep.c3(a, b) = rep.c3(b, a) = u3.value;
      rep.c3_se(a, b) = rep.c3_se(b, a) = u3.se;
    }
  }
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b) {
      const double v = x * (rep.c1(a, b) + rep.c2(a, b) + rep.c3(a, b) + rep.c12(a, b) + rep.c12(b, a));
      rep.cr(a, b) = rep.cr(b, a) = v;
      rep.cr_se(a, b) = rep.cr_se(b, a) = x * rep.c3_se(a, b);
    }
  }
  return rep;
}

/// x (C1 + C2 + C3 + C12 + C12^T) entry for grid positions a, b of a report.
inline double cov_r(const CovarianceReport& rep, double x, std::size_t a, std::size_t b) {
  const auto i = static_cast<Eigen::Index>(a), j = static_cast<Eigen::Index>(b);
  return x * (rep.c1(i, j) + rep.c2(i, j) + rep.c3(i, j) + rep.c12(i, j) + rep.c12(j, i));
}

inline Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json to_json(const CovarianceReport& r) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.model_hash));
  return Json{{"times", r.times},
              {"x", r.x},
              {"covu3_variant", to_string(r.variant)},
              {"model_hash", hash},
              {"h", r.h},
              {"moment_step", r.moment_step},
              {"K", r.K},
              {"C1", matrix_json(r.c1)},
              {"C2", matrix_json(r.c2)},
              {"C3", matrix_json(r.c3)},
              {"C12", matrix_json(r.c12)},
              {"CR", matrix_json(r.cr)},
              {"C3_se", matrix_json(r.c3_se)},
              {"min_eigenvalue_CR", r.times.empty() ? 0.0 : min_eigenvalue(r.cr)}};
}

}  // namespace cmj
