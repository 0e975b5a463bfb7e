#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace qauto {

/// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// 64-bit FNV-1a over the bytes of a string.
constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Counter-based random stream: draw number i of a stream with key k is
/// mix64(k + (i + 1) * 0x9E3779B97F4A7C15), i.e. SplitMix64 seeded with k.
/// The value depends only on (key, counter), so a stream can be reproduced
/// or skipped ahead without replaying earlier draws.
///
/// Distribution helpers are written out here instead of using <random>
/// distributions, whose output is implementation-defined.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGamma);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;

  /// Standard normal via Box-Muller (two uniforms per draw, no caching).
  double normal() noexcept;

  /// Exponential waiting time with the given rate (> 0).
  double exponential(double rate) noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Key for the stream `index` of `module` under a run seed:
///   k0 = mix64(seed + gamma)
///   k1 = mix64(k0 ^ fnv1a64(module))
///   key = mix64(k1 ^ mix64(index + gamma))
/// Adding a new module name or index never changes existing keys.
std::uint64_t derive_stream_key(std::uint64_t seed, std::string_view module,
                                std::uint64_t index = 0) noexcept;

inline RngStream derive_stream(std::uint64_t seed, std::string_view module,
                               std::uint64_t index = 0) noexcept {
  return RngStream(derive_stream_key(seed, module, index));
}

}  // namespace qauto
