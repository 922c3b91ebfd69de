// Copyright 2026 The cmj Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON (de)serialization of ModelSpec. Readers are fail-closed: unknown keys,
// missing keys and wrong types raise ConfigError.

#include <set>
#include <string>
#include <vector>

#include "cmj/error.hpp"
#include "cmj/model.hpp"
#include "json.hpp"

namespace cmj {

using Json = nlohmann::ordered_json;

/// Reads fields of one JSON object and rejects any it was not asked about.
class StrictObject {
 public:
  StrictObject(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  T get(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing field '" + key + "'");
    return convert<T>(key);
  }

  template <class T>
  T get_or(const std::string& key, T fallback) {
    if (!j_.contains(key)) return fallback;
    return convert<T>(key);
  }

  const Json& sub(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing field '" + key + "'");
    used_.insert(key);
    return j_.at(key);
  }

  [[nodiscard]] std::string path(const std::string& key) const { return where_ + "." + key; }

  /// Throws if the object has keys that were never read.
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError(where_ + ": unknown field '" + k + "'");
    }
  }

 private:
  template <class T>
  T convert(const std::string& key) {
    used_.insert(key);
    const Json& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path(key) + ": expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(path(key) + ": expected an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
        throw ConfigError(path(key) + ": expected a nonnegative integer");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(path(key) + ": expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path(key) + ": expected a string");
    }
    try {
      return v.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path(key) + ": " + e.what());
    }
  }

  const Json& j_;
  std::string where_;
  std::set<std::string> used_;
};

// ---- writers ---------------------------------------------------------------

inline Json to_json(const LifetimeSpec& l) {
  return std::visit(detail::overloaded{
                        [](const ExponentialLifetime& f) { return Json{{"family", "exponential"}, {"rate", f.rate}}; },
                        [](const WeibullLifetime& f) {
                          return Json{{"family", "weibull"}, {"scale", f.scale}, {"shape", f.shape}};
                        },
                        [](const UniformLifetime& f) { return Json{{"family", "uniform"}, {"a", f.a}, {"b", f.b}}; },
                    },
                    l.family());
}

inline Json to_json(const BirthRateSpec& b) {
  Json shape = std::visit(
      detail::overloaded{
          [](const ConstantRate& f) { return Json{{"family", "constant"}, {"c", f.c}}; },
          [](const ExpDecayRate& f) { return Json{{"family", "exp_decay"}, {"c", f.c}, {"beta", f.beta}}; },
          [](const PiecewiseConstantRate& f) {
            return Json{{"family", "piecewise_constant"}, {"breakpoints", f.breakpoints}, {"levels", f.levels}};
          },
      },
      b.shape.family());
  Json scale = std::visit(
      detail::overloaded{
          [](const DeterministicScale&) { return Json{{"family", "deterministic"}}; },
          [](const DiscreteScale& f) { return Json{{"family", "discrete"}, {"values", f.values}, {"probs", f.probs}}; },
          [](const GammaScale& f) { return Json{{"family", "gamma"}, {"shape", f.shape}, {"scale", f.scale}}; },
      },
      b.scale.family());
  return Json{{"shape", shape}, {"scale", scale}, {"gated", b.gated}};
}

inline Json to_json(const OffspringSpec& o) {
  return std::visit(
      detail::overloaded{
          [](const DeterministicOffspring& f) { return Json{{"family", "deterministic"}, {"k", f.k}}; },
          [](const TwoPointOffspring& f) {
            return Json{{"family", "two_point"}, {"k1", f.k1}, {"k2", f.k2}, {"p", f.p}};
          },
          [](const ShiftedPoissonOffspring& f) { return Json{{"family", "shifted_poisson"}, {"nu", f.nu}}; },
      },
      o.family());
}

inline Json to_json(const ModelSpec& m) {
  return Json{{"lifetime", to_json(m.lifetime)},
              {"birthrate", to_json(m.birthrate)},
              {"offspring", to_json(m.offspring)},
              {"horizon", m.horizon}};
}

// ---- readers ---------------------------------------------------------------

inline LifetimeSpec lifetime_from_json(const Json& j, const std::string& where = "lifetime") {
  StrictObject o(j, where);
  const auto family = o.get<std::string>("family");
  LifetimeSpec out;
  if (family == "exponential") {
    out = LifetimeSpec(ExponentialLifetime{o.get<double>("rate")});
  } else if (family == "weibull") {
    const double scale = o.get<double>("scale");
    out = LifetimeSpec(WeibullLifetime{scale, o.get<double>("shape")});
  } else if (family == "uniform") {
    const double a = o.get<double>("a");
    out = LifetimeSpec(UniformLifetime{a, o.get<double>("b")});
  } else {
    throw ConfigError(where + ": unknown lifetime family '" + family + "'");
  }
  o.finish();
  return out;
}

inline BirthRateSpec birthrate_from_json(const Json& j, const std::string& where = "birthrate") {
  StrictObject o(j, where);
  BirthRateSpec out;
  {
    StrictObject s(o.sub("shape"), o.path("shape"));
    const auto family = s.get<std::string>("family");
    if (family == "constant") {
      out.shape = RateShape(ConstantRate{s.get<double>("c")});
    } else if (family == "exp_decay") {
      const double c = s.get<double>("c");
      out.shape = RateShape(ExpDecayRate{c, s.get<double>("beta")});
    } else if (family == "piecewise_constant") {
      auto bps = s.get<std::vector<double>>("breakpoints");
      out.shape = RateShape(PiecewiseConstantRate{std::move(bps), s.get<std::vector<double>>("levels")});
    } else {
      throw ConfigError(o.path("shape") + ": unknown rate shape '" + family + "'");
    }
    s.finish();
  }
  if (o.has("scale")) {
    StrictObject s(o.sub("scale"), o.path("scale"));
    const auto family = s.get<std::string>("family");
    if (family == "deterministic") {
      out.scale = ScaleLaw(DeterministicScale{});
    } else if (family == "discrete") {
      auto values = s.get<std::vector<double>>("values");
      out.scale = ScaleLaw(DiscreteScale{std::move(values), s.get<std::vector<double>>("probs")});
    } else if (family == "gamma") {
      const double k = s.get<double>("shape");
      out.scale = ScaleLaw(GammaScale{k, s.get<double>("scale")});
    } else {
      throw ConfigError(o.path("scale") + ": unknown scale family '" + family + "'");
    }
    s.finish();
  }
  out.gated = o.get_or<bool>("gated", true);
  o.finish();
  return out;
}

inline OffspringSpec offspring_from_json(const Json& j, const std::string& where = "offspring") {
  StrictObject o(j, where);
  const auto family = o.get<std::string>("family");
  OffspringSpec out;
  if (family == "deterministic") {
    out = OffspringSpec(DeterministicOffspring{o.get<std::uint32_t>("k")});
  } else if (family == "two_point") {
    const auto k1 = o.get<std::uint32_t>("k1");
    const auto k2 = o.get<std::uint32_t>("k2");
    out = OffspringSpec(TwoPointOffspring{k1, k2, o.get<double>("p")});
  } else if (family == "shifted_poisson") {
    out = OffspringSpec(ShiftedPoissonOffspring{o.get<double>("nu")});
  } else {
    throw ConfigError(where + ": unknown offspring family '" + family + "'");
  }
  o.finish();
  return out;
}

inline ModelSpec model_from_json(const Json& j, const std::string& where = "model") {
  StrictObject o(j, where);
  ModelSpec m;
  m.lifetime = lifetime_from_json(o.sub("lifetime"), o.path("lifetime"));
  m.birthrate = birthrate_from_json(o.sub("birthrate"), o.path("birthrate"));
  m.offspring = offspring_from_json(o.sub("offspring"), o.path("offspring"));
  m.horizon = o.get<double>("horizon");
  o.finish();
  m.validate();
  return m;
}

}  // namespace cmj
