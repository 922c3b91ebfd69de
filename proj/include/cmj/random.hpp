// Copyright 2026 The cmj Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Counter-based random streams.
//
// Every random quantity in the library is drawn from a RandomStream that is
// derived from (master seed, label path). The derivation is a fixed hash, so a
// given label path always yields the same numbers regardless of how work is
// scheduled across threads.
//
// Label hashing: the root key of a seed is (mix(seed ^ K0), mix(seed ^ K1)),
// and each label l updates the pair as
//   a <- mix(a ^ mix(l + K2)),   b <- mix(b + mix(l ^ K3))
// where mix is the SplitMix64 finalizer. Word a becomes the Philox key, word b
// the upper half of the Philox counter; the lower half counts blocks.

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>

namespace cmj {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Philox4x32-10 block function.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter generate(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Identity of a stream: a hashed label path below a master seed.
struct StreamKey {
  std::uint64_t a = 0;
  std::uint64_t b = 0;

  static constexpr StreamKey root(std::uint64_t seed) noexcept {
    return {mix64(seed ^ 0x243F6A8885A308D3ULL), mix64(seed ^ 0x13198A2E03707344ULL)};
  }

  [[nodiscard]] constexpr StreamKey child(std::uint64_t label) const noexcept {
    return {mix64(a ^ mix64(label + 0xA4093822299F31D0ULL)),
            mix64(b + mix64(label ^ 0x082EFA98EC4E6C89ULL))};
  }

  [[nodiscard]] constexpr StreamKey child(std::initializer_list<std::uint64_t> labels) const noexcept {
    StreamKey k = *this;
    for (auto l : labels) k = k.child(l);
    return k;
  }

  friend constexpr bool operator==(const StreamKey&, const StreamKey&) = default;
};

/// Sequential view of a Philox stream. Cheap to construct.
class RandomStream {
 public:
  explicit constexpr RandomStream(StreamKey key) noexcept
      : key_{static_cast<std::uint32_t>(key.a), static_cast<std::uint32_t>(key.a >> 32)},
        hi_{static_cast<std::uint32_t>(key.b), static_cast<std::uint32_t>(key.b >> 32)} {}

  std::uint32_t next_u32() noexcept {
    if (pos_ == 4) refill();
    return buffer_[pos_++];
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() noexcept { return 1.0 - uniform(); }

  /// Uniform on the open interval (0, 1).
  double uniform_open() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double exponential(double rate) noexcept { return -std::log(uniform_open()) / rate; }

  /// Standard normal (Box-Muller, no caching).
  double normal() noexcept {
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    return r * std::cos(6.283185307179586 * uniform());
  }

  /// Gamma(shape, 1) by Marsaglia-Tsang.
  double gamma(double shape) noexcept {
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform_pos(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double z = 0.0;
      double v = 0.0;
      do {
        z = normal();
        v = 1.0 + c * z;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * z * z * z * z) return d * v;
      if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /// Poisson(mean): multiplicative inversion below 30, PTRS (Hoermann 1993) above.
  std::uint64_t poisson(double mean) noexcept {
    if (!(mean > 0.0)) return 0;
    if (mean < 30.0) {
      const double limit = std::exp(-mean);
      std::uint64_t k = 0;
      double prod = uniform();
      while (prod > limit) {
        ++k;
        prod *= uniform();
      }
      return k;
    }
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::fabs(u);
      const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
          -mean + k * loglam - std::lgamma(k + 1.0)) {
        return static_cast<std::uint64_t>(k);
      }
    }
  }

  /// Index drawn from a discrete distribution given by `probs` (assumed to sum to 1).
  std::size_t discrete(std::span<const double> probs) noexcept {
    double u = uniform();
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      if (u < probs[i]) return i;
      u -= probs[i];
    }
    return probs.size() - 1;
  }

 private:
  void refill() noexcept {
    buffer_ = Philox4x32::generate(
        {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32), hi_[0], hi_[1]},
        key_);
    ++block_;
    pos_ = 0;
  }

  Philox4x32::Key key_;
  std::array<std::uint32_t, 2> hi_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buffer_{};
  int pos_ = 4;
};

/// Stream for the label path `labels` below `master_seed`.
inline RandomStream derive_stream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> labels) {
  return RandomStream(StreamKey::root(master_seed).child(labels));
}

inline RandomStream derive_stream(std::uint64_t master_seed, std::span<const std::uint64_t> labels) {
  StreamKey k = StreamKey::root(master_seed);
  for (auto l : labels) k = k.child(l);
  return RandomStream(k);
}

}  // namespace cmj
