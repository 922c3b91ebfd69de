// Copyright 2026 The cmj Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Experiment configuration, orchestration and artifacts.
//
// Every experiment writes {experiment}-{seed}.csv and {experiment}-{seed}.json
// into the output directory. The JSON summary lists each check with its value,
// threshold, z-score when there is one, and pass flag.
//
// Exit codes: 0 all checks pass, 1 some check failed, 2 model assumption
// violated, 3 a tree hit the individual cap, 4 configuration or usage error.
//
// Stream labels below the seed's root key:
//   1 population (simulate)   2 single trees (simulate)   3 lln
//   {4,0} clt replicates      {4,1} mixed moments (clt, covariance)
//   5 prm identities          6 prm characteristic        7 increment moments

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cmj/covariance.hpp"
#include "cmj/error.hpp"
#include "cmj/grid.hpp"
#include "cmj/io.hpp"
#include "cmj/json_io.hpp"
#include "cmj/limits.hpp"
#include "cmj/model.hpp"
#include "cmj/prm.hpp"
#include "cmj/random.hpp"
#include "cmj/simulate.hpp"
#include "cmj/stats.hpp"
#include "cmj/volterra.hpp"

namespace cmj {

enum class Experiment { SolveMean, Simulate, Lln, Clt, PrmCheck, HolderCheck, Covariance };

inline constexpr std::array<const char*, 7> kExperimentNames = {"solve-mean", "simulate",     "lln",       "clt",
                                                                 "prm-check",  "holder-check", "covariance"};

inline std::string to_string(Experiment e) { return kExperimentNames[static_cast<std::size_t>(e)]; }

inline Experiment experiment_from_string(const std::string& s) {
  for (std::size_t i = 0; i < kExperimentNames.size(); ++i) {
    if (s == kExperimentNames[i]) return static_cast<Experiment>(i);
  }
  throw ConfigError("unknown experiment '" + s + "'");
}

namespace exit_code {
inline constexpr int kPass = 0;
inline constexpr int kCheckFailed = 1;
inline constexpr int kAssumption = 2;
inline constexpr int kTruncation = 3;
inline constexpr int kConfig = 4;
}  // namespace exit_code

struct GridConfig {
  double h = 1e-3;           // mean-solution step
  double T = 2.0;            // experiment horizon
  double eval_step = 0.5;    // population / evaluation grid
  double moment_step = 0.02; // grid of the mixed moments E[Z(t) Z(s)]
  bool operator==(const GridConfig&) const = default;
};

struct SizeConfig {
  std::size_t N = 500;
  double x = 1.0;
  std::size_t M = 4000;
  std::size_t K = 100000;
  std::vector<std::size_t> N_ladder = {100, 1000, 10000};
  std::size_t replicates = 5;
  std::size_t prm_samples = 1000000;
  std::size_t cap = kDefaultIndividualCap;
  bool operator==(const SizeConfig&) const = default;
};

struct FlagConfig {
  CovU3Variant covu3_variant = CovU3Variant::Default;
  std::optional<bool> gated;  // overrides model.birthrate.gated when set
  bool operator==(const FlagConfig&) const = default;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::SolveMean;
  ModelSpec model;
  GridConfig grid;
  SizeConfig sizes;
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  FlagConfig flags;

  [[nodiscard]] ModelSpec effective_model() const {
    ModelSpec m = model;
    if (flags.gated) m.birthrate.gated = *flags.gated;
    return m;
  }

  void validate() const {
    auto req = [](bool ok, const char* msg) {
      if (!ok) throw ConfigError(msg);
    };
    auto pos = [](double v) { return v > 0.0 && std::isfinite(v); };
    req(pos(grid.h) && pos(grid.T) && pos(grid.eval_step) && pos(grid.moment_step), "grid steps and T must be positive");
    req(grid.T <= model.horizon * (1 + 1e-12), "grid.T exceeds the model horizon");
    req(sizes.N > 0 && sizes.M > 0 && sizes.K > 0 && sizes.replicates > 0 && sizes.prm_samples > 0 && sizes.cap > 0,
        "all sizes must be positive");
    req(pos(sizes.x), "sizes.x must be positive");
    req(!sizes.N_ladder.empty(), "sizes.N_ladder must not be empty");
    for (auto n : sizes.N_ladder) req(n > 0, "sizes.N_ladder entries must be positive");
  }
};

inline Json to_json(const ExperimentConfig& c) {
  Json flags{{"covu3_variant", to_string(c.flags.covu3_variant)}};
  if (c.flags.gated) flags["gated"] = *c.flags.gated;
  return Json{{"experiment", to_string(c.experiment)},
              {"model", to_json(c.model)},
              {"grid",
               {{"h", c.grid.h}, {"T", c.grid.T}, {"eval_step", c.grid.eval_step}, {"moment_step", c.grid.moment_step}}},
              {"sizes",
               {{"N", c.sizes.N},
                {"x", c.sizes.x},
                {"M", c.sizes.M},
                {"K", c.sizes.K},
                {"N_ladder", c.sizes.N_ladder},
                {"replicates", c.sizes.replicates},
                {"prm_samples", c.sizes.prm_samples},
                {"cap", c.sizes.cap}}},
              {"seed", c.seed},
              {"output_dir", c.output_dir},
              {"flags", flags}};
}

/// Strict reader: unknown fields anywhere are rejected. The seed is required
/// unless seed_override is given.
inline ExperimentConfig config_from_json(const Json& j, std::optional<std::uint64_t> seed_override = std::nullopt) {
  StrictObject o(j, "config");
  ExperimentConfig c;
  c.experiment = experiment_from_string(o.get<std::string>("experiment"));
  c.model = model_from_json(o.sub("model"), "config.model");
  c.grid.T = c.model.horizon;
  if (o.has("grid")) {
    StrictObject g(o.sub("grid"), "config.grid");
    c.grid.h = g.get_or("h", c.grid.h);
    c.grid.T = g.get_or("T", c.grid.T);
    c.grid.eval_step = g.get_or("eval_step", c.grid.eval_step);
    c.grid.moment_step = g.get_or("moment_step", c.grid.moment_step);
    g.finish();
  }
  if (o.has("sizes")) {
    StrictObject s(o.sub("sizes"), "config.sizes");
    c.sizes.N = s.get_or("N", c.sizes.N);
    c.sizes.x = s.get_or("x", c.sizes.x);
    c.sizes.M = s.get_or("M", c.sizes.M);
    c.sizes.K = s.get_or("K", c.sizes.K);
    if (s.has("N_ladder")) {
      const Json& l = s.sub("N_ladder");
      if (!l.is_array()) throw ConfigError("config.sizes.N_ladder: expected an array");
      c.sizes.N_ladder.clear();
      for (const auto& v : l) {
        if (!v.is_number_unsigned()) throw ConfigError("config.sizes.N_ladder: expected positive integers");
        c.sizes.N_ladder.push_back(v.get<std::size_t>());
      }
    }
    c.sizes.replicates = s.get_or("replicates", c.sizes.replicates);
    c.sizes.prm_samples = s.get_or("prm_samples", c.sizes.prm_samples);
    c.sizes.cap = s.get_or("cap", c.sizes.cap);
    s.finish();
  }
  if (seed_override) {
    if (o.has("seed")) (void)o.get<std::uint64_t>("seed");
    c.seed = *seed_override;
  } else {
    c.seed = o.get<std::uint64_t>("seed");
  }
  c.output_dir = o.get_or<std::string>("output_dir", c.output_dir);
  if (o.has("flags")) {
    StrictObject f(o.sub("flags"), "config.flags");
    c.flags.covu3_variant = covu3_variant_from_string(f.get_or<std::string>("covu3_variant", "default"));
    if (f.has("gated")) c.flags.gated = f.get<bool>("gated");
    f.finish();
  }
  o.finish();
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path,
                                    std::optional<std::uint64_t> seed_override = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j, seed_override);
}

// ---------------------------------------------------------------------------

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::optional<double> z;
};

struct RunResult {
  int exit_code = exit_code::kPass;
  std::string status;  // "pass", "fail", "assumption_violation", "truncation", "config_error"
  std::string message;
  std::vector<Check> checks;
  Json summary;
  std::string csv;
  std::filesystem::path csv_path, json_path;

  [[nodiscard]] bool all_pass() const noexcept {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
};

namespace detail {

inline Json json_real(double v) {
  if (std::isfinite(v)) return v;
  return format_real(v);
}

inline Json checks_json(const std::vector<Check>& checks) {
  Json arr = Json::array();
  for (const auto& c : checks) {
    Json e{{"name", c.name}, {"pass", c.pass}, {"value", json_real(c.value)}, {"threshold", json_real(c.threshold)}};
    if (c.z) e["z"] = json_real(*c.z);
    arr.push_back(std::move(e));
  }
  return arr;
}

inline std::string pair_label(const char* what, double t, double s) {
  return std::string(what) + "(" + format_real(t) + "," + format_real(s) + ")";
}
inline std::string point_label(const char* what, double t) {
  return std::string(what) + "(" + format_real(t) + ")";
}

/// Grid of the given step that ends exactly at T.
inline TimeGrid exact_grid(double step, double T, const char* what) {
  const auto g = TimeGrid::covering(step, T);
  if (std::fabs(g.last() - T) > 1e-9 * step) {
    throw ConfigError(std::string(what) + " step does not divide the horizon T");
  }
  return g;
}

/// Every node of coarse must be a node of fine.
inline void require_subgrid(const TimeGrid& coarse, const TimeGrid& fine, const char* what) {
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    if (!fine.index_of(coarse.time(i))) throw ConfigError(std::string(what) + " is not a subgrid of the finer grid");
  }
}

inline Check z_check(std::string name, const stats::Estimate& e, double target, double z_max = 4.0) {
  const double z = e.z(target);
  return {std::move(name), std::fabs(z) <= z_max, e.value, target, z};
}

struct Context {
  const ExperimentConfig& cfg;
  ModelSpec model;
  StreamKey key;
  unsigned threads;
  Json details = Json::object();
  std::vector<Check> checks;
  std::string csv;

  [[nodiscard]] TimeGrid fine() const { return exact_grid(cfg.grid.h, cfg.grid.T, "grid.h"); }
  [[nodiscard]] TimeGrid eval() const {
    auto g = exact_grid(cfg.grid.eval_step, cfg.grid.T, "grid.eval_step");
    return g;
  }
  [[nodiscard]] TimeGrid moment() const { return exact_grid(cfg.grid.moment_step, cfg.grid.T, "grid.moment_step"); }
};

inline void run_solve_mean(Context& cx) {
  const auto grid = cx.fine();
  const auto m1 = solve_mean(cx.model, grid);
  const auto closed = markov_mean(cx.model);
  const double eps = std::numeric_limits<double>::epsilon();
  cx.checks.push_back({"residual", m1.max_relative_residual() <= 10 * eps, m1.max_relative_residual(), 10 * eps, {}});

  auto max_rel = [&](const MeanSolution& s) {
    double e = 0.0;
    for (std::size_t i = 0; i < s.grid().size(); ++i) {
      const double ref = (*closed)(s.grid().time(i));
      e = std::max(e, std::fabs(s[i] - ref) / std::fabs(ref));
    }
    return e;
  };

  CsvTable t(closed ? std::vector<std::string>{"t", "M1", "survival", "closed_form", "rel_error"}
                    : std::vector<std::string>{"t", "M1", "survival"});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double ti = grid.time(i);
    if (closed) {
      const double ref = (*closed)(ti);
      t.row() << ti << m1[i] << m1.survival()[i] << ref << std::fabs(m1[i] - ref) / std::fabs(ref);
    } else {
      t.row() << ti << m1[i] << m1.survival()[i];
    }
  }
  cx.csv = t.str();
  cx.details["h"] = grid.step();
  cx.details["n_points"] = grid.size();
  cx.details["max_relative_residual"] = m1.max_relative_residual();
  if (closed) {
    const double e = max_rel(m1);
    const auto half = solve_mean(cx.model, TimeGrid(0.5 * grid.step(), 2 * (grid.size() - 1) + 1));
    const double e_half = max_rel(half);
    const double ratio = e / e_half;
    cx.details["max_rel_error"] = e;
    cx.details["max_rel_error_half_step"] = e_half;
    cx.details["refinement_ratio"] = json_real(ratio);
    cx.checks.push_back({"max_rel_error", e <= 1e-4, e, 1e-4, {}});
    cx.checks.push_back({"refinement_ratio", ratio >= 3.5, ratio, 3.5, {}});
  }
}

inline void run_simulate(Context& cx) {
  const auto& s = cx.cfg.sizes;
  const auto fine = cx.fine();
  const auto eval = cx.eval();
  require_subgrid(eval, fine, "grid.eval_step");
  const auto m1 = solve_mean(cx.model, fine);
  const auto pop = simulate_population(cx.model, s.N, s.x, eval, cx.key.child(1), s.cap, cx.threads);
  const auto zt = moments_Z(cx.model, eval, s.K, cx.key.child(2), s.cap, cx.threads);
  const double n0 = static_cast<double>(ancestor_count(s.N, s.x)) / static_cast<double>(s.N);
  cx.checks.push_back({"initial_population", pop.X[0] == n0, pop.X[0], n0, {}});
  CsvTable t({"t", "X", "x_M1", "mean_Z", "se_Z", "M1", "z"});
  for (std::size_t p = 0; p < eval.size(); ++p) {
    const double m = m1[fine.require_index(eval.time(p))];
    const stats::Estimate e{zt.m1[p], zt.se1[p]};
    t.row() << eval.time(p) << pop.X[p] << s.x * m << e.value << e.se << m << e.z(m);
    if (p > 0) cx.checks.push_back(z_check(point_label("mean_Z", eval.time(p)), e, m));
  }
  cx.csv = t.str();
  cx.details["N"] = s.N;
  cx.details["n_ancestors"] = pop.ancestors.size();
  cx.details["K"] = s.K;
}

inline void run_lln(Context& cx) {
  const auto& s = cx.cfg.sizes;
  const auto fine = cx.fine();
  const auto eval = cx.eval();
  require_subgrid(eval, fine, "grid.eval_step");
  const auto m1 = solve_mean(cx.model, fine);
  const auto tab = lln_experiment(cx.model, m1, s.x, s.N_ladder, eval, cx.key.child(3), s.replicates, s.cap, cx.threads);
  CsvTable t({"N", "replicate", "sup_error"});
  for (const auto& r : tab.rows) t.row() << r.N << r.replicate << r.sup_error;
  cx.csv = t.str();
  Json med = Json::array();
  for (std::size_t k = 0; k < tab.ladder.size(); ++k) med.push_back({{"N", tab.ladder[k]}, {"median", tab.medians[k]}});
  cx.details["medians"] = med;
  cx.checks.push_back({"medians_strictly_decreasing", tab.medians_strictly_decreasing(), 0.0, 0.0, {}});
  if (tab.ladder.size() > 1) {
    // sqrt(N) scaling within a factor of 3.
    const double r = std::sqrt(static_cast<double>(tab.ladder.front()) / static_cast<double>(tab.ladder.back()));
    const double q = tab.decay_ratio();
    cx.details["decay_ratio"] = json_real(q);
    cx.details["decay_window"] = {r / 3.0, 3.0 * r};
    cx.checks.push_back({"decay_ratio_low", q >= r / 3.0, q, r / 3.0, {}});
    cx.checks.push_back({"decay_ratio_high", q <= 3.0 * r, q, 3.0 * r, {}});
  }
}

inline MixedMoments shared_mixed_moments(const Context& cx, const TimeGrid& fine) {
  const auto mg = cx.moment();
  require_subgrid(mg, fine, "grid.moment_step");
  return mixed_moment_Z(cx.model, mg, cx.cfg.sizes.K, cx.key.child({4, 1}), cx.cfg.sizes.cap, cx.threads);
}

inline void run_clt(Context& cx) {
  const auto& s = cx.cfg.sizes;
  cx.model.require_clt();
  const auto fine = cx.fine();
  const auto eval = cx.eval();
  require_subgrid(eval, fine, "grid.eval_step");
  require_subgrid(eval, cx.moment(), "grid.eval_step");
  const auto m1 = solve_mean(cx.model, fine);
  const auto samples = clt_samples(cx.model, m1, s.x, s.N, s.M, eval, cx.key.child({4, 0}), s.cap, cx.threads);
  const auto st = clt_statistics(samples);
  const auto m2 = shared_mixed_moments(cx, fine);
  const auto rep = covariance_report(cx.model, m1, m2, st.times, s.x, cx.cfg.flags.covu3_variant);
  const auto cmp = compare_covariance(st, rep);

  CsvTable t({"t", "s", "empirical", "se", "analytic", "analytic_se", "tolerance", "z", "pass"});
  for (const auto& c : cmp) {
    t.row() << c.t << c.s << c.empirical << c.se << c.analytic << c.analytic_se << c.tolerance << c.z() << c.pass;
    cx.checks.push_back({pair_label("cov_R", c.t, c.s), c.pass, c.empirical, c.analytic, c.z()});
  }
  cx.csv = t.str();
  const std::size_t m = st.times.size();
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      cx.checks.push_back(z_check(pair_label("corr_U1_U3", st.times[a], st.times[b]), st.corr_U1U3[a][b], 0.0));
      if (st.corr_U2U3[a][b].se > 0.0) {
        cx.checks.push_back(z_check(pair_label("corr_U2_U3", st.times[a], st.times[b]), st.corr_U2U3[a][b], 0.0));
      }
    }
  }
  Json per_point = Json::array();
  for (std::size_t a = 0; a < m; ++a) {
    cx.checks.push_back(z_check(point_label("skewness_R", st.times[a]), st.skewness[a], 0.0));
    cx.checks.push_back(z_check(point_label("excess_kurtosis_R", st.times[a]), st.excess_kurtosis[a], 0.0));
    per_point.push_back({{"t", st.times[a]},
                         {"skewness", st.skewness[a].value},
                         {"skewness_se", st.skewness[a].se},
                         {"excess_kurtosis", st.excess_kurtosis[a].value},
                         {"excess_kurtosis_se", st.excess_kurtosis[a].se},
                         {"mean_U1", st.mean_U1[a].value},
                         {"mean_U2", st.mean_U2[a].value},
                         {"mean_U3", st.mean_U3[a].value},
                         {"var_U1", st.var_U1[a].value},
                         {"var_U1_se", st.var_U1[a].se}});
  }
  // Rounding only: R and the recombined U terms are the same sums in a different order.
  const double id_tol = 1e-8;
  cx.checks.push_back({"decomposition_identity", st.max_identity_error <= id_tol, st.max_identity_error, id_tol, {}});
  cx.checks.push_back({"covariance_psd", rep.psd(), min_eigenvalue(rep.cr), -1e-8 * rep.cr.trace(), {}});
  cx.details["N"] = s.N;
  cx.details["M"] = s.M;
  cx.details["per_point"] = per_point;
  cx.details["covariance"] = to_json(rep);
}

inline void run_prm_check(Context& cx) {
  using namespace prm;
  const Region region(2.0, 1.0);
  const auto f = StepFunction::indicator(0.0, 1.0, 0.0, 1.0);
  const auto g = StepFunction::indicator(1.0, 2.0, 0.0, 1.0);
  const std::size_t n = cx.cfg.sizes.prm_samples;
  const auto ids = verify_identities(f, g, region, n, cx.key.child(5), cx.threads);
  const auto chr = verify_characteristic(f, region, n, cx.key.child(6), cx.threads);
  CsvTable t({"identity", "analytic", "empirical", "se", "z"});
  for (const auto* r : {&ids, &chr}) {
    for (const auto& c : r->checks) {
      t.row() << ("\"" + c.identity + "\"") << c.analytic << c.empirical << c.se << c.z;
      cx.checks.push_back({c.identity, std::fabs(c.z) <= 4.0, c.empirical, c.analytic, c.z});
    }
  }
  cx.csv = t.str();
  cx.details["n_samples"] = n;
  cx.details["identities"] = to_json(ids);
  cx.details["characteristic"] = to_json(chr);
}

inline void run_holder_check(Context& cx) {
  cx.model.require_clt();
  const auto fine = cx.fine();
  const auto m1 = solve_mean(cx.model, fine);
  const auto tab = holder_diagnostics(cx.model, m1, cx.cfg.sizes.K, cx.key.child(7), 20, 0.05, 1.0, cx.cfg.sizes.cap,
                                      cx.threads);
  CsvTable t({"kind", "s", "v", "t", "d", "mean", "se", "ratio", "ratio_se"});
  for (const auto& r : tab.pairs) t.row() << "pair" << r.s << r.v << r.t << (r.t - r.s) << r.mean << r.se << r.ratio << r.ratio_se;
  for (const auto& r : tab.triples) {
    t.row() << "triple" << r.s << r.v << r.t << (r.t - r.s) << r.mean << r.se << r.ratio << r.ratio_se;
  }
  cx.csv = t.str();
  const double max_slope = 0.1;
  cx.details["alpha"] = tab.alpha;
  cx.details["beta"] = tab.beta;
  cx.details["K"] = tab.K;
  cx.details["pair_slope"] = tab.pair_trend.slope;
  cx.details["pair_slope_se"] = tab.pair_trend.slope_se;
  cx.details["triple_slope"] = tab.triple_trend.slope;
  cx.details["triple_slope_se"] = tab.triple_trend.slope_se;
  cx.checks.push_back({"pair_trend_slope", tab.pairs_all_zero || tab.pair_trend.slope <= max_slope,
                       tab.pair_trend.slope, max_slope, {}});
  cx.checks.push_back({"triple_trend_slope", tab.triples_all_zero || tab.triple_trend.slope <= max_slope,
                       tab.triple_trend.slope, max_slope, {}});
}

inline void run_covariance(Context& cx) {
  cx.model.require_clt();
  const auto fine = cx.fine();
  const auto eval = cx.eval();
  require_subgrid(eval, fine, "grid.eval_step");
  require_subgrid(eval, cx.moment(), "grid.eval_step");
  const auto m1 = solve_mean(cx.model, fine);
  const auto m2 = shared_mixed_moments(cx, fine);
  std::vector<double> times;
  for (std::size_t p = 1; p < eval.size(); ++p) times.push_back(eval.time(p));
  const auto rep = covariance_report(cx.model, m1, m2, times, cx.cfg.sizes.x, cx.cfg.flags.covu3_variant);
  CsvTable t({"matrix", "t", "s", "value"});
  const std::pair<const char*, const Matrix*> mats[] = {{"C1", &rep.c1}, {"C2", &rep.c2},   {"C3", &rep.c3},
                                                         {"C12", &rep.c12}, {"CR", &rep.cr}, {"C3_se", &rep.c3_se}};
  for (const auto& [name, mat] : mats) {
    for (std::size_t a = 0; a < times.size(); ++a) {
      for (std::size_t b = 0; b < times.size(); ++b) {
        t.row() << name << times[a] << times[b] << (*mat)(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      }
    }
  }
  cx.csv = t.str();
  cx.checks.push_back({"symmetric", rep.symmetric(), 0.0, 0.0, {}});
  cx.checks.push_back({"covariance_psd", rep.psd(), min_eigenvalue(rep.cr), -1e-8 * rep.cr.trace(), {}});
  cx.details["covariance"] = to_json(rep);
}

/// Config as echoed in the summary; output_dir is left out so that the same
/// run written to different directories produces identical files.
inline Json echoed_config(const ExperimentConfig& c) {
  Json j = to_json(c);
  j.erase("output_dir");
  return j;
}

}  // namespace detail

/// Runs one experiment and writes its artifacts. Never throws for model,
/// configuration or truncation problems: they are reported through the exit code.
inline RunResult run(const ExperimentConfig& cfg, unsigned threads = 1, bool write_artifacts = true) {
  RunResult res;
  const std::string stem = to_string(cfg.experiment) + "-" + std::to_string(cfg.seed);
  res.csv_path = std::filesystem::path(cfg.output_dir) / (stem + ".csv");
  res.json_path = std::filesystem::path(cfg.output_dir) / (stem + ".json");
  Json details = Json::object();
  try {
    cfg.validate();
    detail::Context cx{cfg, cfg.effective_model(), StreamKey::root(cfg.seed), std::max(1u, threads), {}, {}, {}};
    const auto report = cx.model.validate();
    if (!report.h1) throw AssumptionError("offspring mean or birth-rate mean is not finite");
    switch (cfg.experiment) {
      case Experiment::SolveMean: detail::run_solve_mean(cx); break;
      case Experiment::Simulate: detail::run_simulate(cx); break;
      case Experiment::Lln: detail::run_lln(cx); break;
      case Experiment::Clt: detail::run_clt(cx); break;
      case Experiment::PrmCheck: detail::run_prm_check(cx); break;
      case Experiment::HolderCheck: detail::run_holder_check(cx); break;
      case Experiment::Covariance: detail::run_covariance(cx); break;
    }
    res.checks = std::move(cx.checks);
    res.csv = std::move(cx.csv);
    details = std::move(cx.details);
    res.exit_code = res.all_pass() ? exit_code::kPass : exit_code::kCheckFailed;
    res.status = res.all_pass() ? "pass" : "fail";
  } catch (const AssumptionError& e) {
    res.exit_code = exit_code::kAssumption, res.status = "assumption_violation", res.message = e.what();
  } catch (const TruncationError& e) {
    res.exit_code = exit_code::kTruncation, res.status = "truncation", res.message = e.what();
  } catch (const ConfigError& e) {
    res.exit_code = exit_code::kConfig, res.status = "config_error", res.message = e.what();
  } catch (const DomainError& e) {
    res.exit_code = exit_code::kConfig, res.status = "config_error", res.message = e.what();
  }

  res.summary = Json{{"experiment", to_string(cfg.experiment)},
                     {"seed", cfg.seed},
                     {"status", res.status},
                     {"exit_code", res.exit_code},
                     {"all_pass", res.exit_code == exit_code::kPass}};
  if (!res.message.empty()) res.summary["message"] = res.message;
  res.summary["checks"] = detail::checks_json(res.checks);
  res.summary["results"] = std::move(details);
  res.summary["config"] = detail::echoed_config(cfg);

  if (write_artifacts) {
    try {
      if (!res.csv.empty()) write_file(res.csv_path, res.csv);
      write_file(res.json_path, res.summary.dump(2) + "\n");
    } catch (const Error& e) {
      res.exit_code = exit_code::kConfig, res.status = "config_error", res.message = e.what();
    }
  }
  return res;
}

}  // namespace cmj
