#include "qauto/rng.hpp"

#include <cmath>
#include <numbers>

namespace qauto {

std::uint64_t RngStream::uniform_index(std::uint64_t n) noexcept {
  // Rejection keeps the draw exactly uniform for every n.
  const std::uint64_t limit = max() - (max() % n);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

double RngStream::normal() noexcept {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::exponential(double rate) noexcept {
  return -std::log1p(-uniform()) / rate;
}

std::uint64_t derive_stream_key(std::uint64_t seed, std::string_view module,
                                std::uint64_t index) noexcept {
  constexpr std::uint64_t gamma = 0x9E3779B97F4A7C15ULL;
  const std::uint64_t k0 = mix64(seed + gamma);
  const std::uint64_t k1 = mix64(k0 ^ fnv1a64(module));
  return mix64(k1 ^ mix64(index + gamma));
}

}  // namespace qauto
