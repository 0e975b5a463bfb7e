#include "qauto/rng.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace qauto;

namespace {

// Textbook stateful SplitMix64.
struct SplitMix64 {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
};

}  // namespace

TEST_SUITE("rng") {
  TEST_CASE("stream matches stateful splitmix64") {
    for (std::uint64_t key : {0ULL, 1ULL, 1234567ULL, 0xFFFFFFFFFFFFFFFFULL}) {
      SplitMix64 ref{key};
      RngStream s(key);
      for (int i = 0; i < 1000; ++i) REQUIRE(s.next_u64() == ref.next());
    }
  }

  TEST_CASE("fnv1a64 reference vectors") {
    CHECK(fnv1a64("") == 0xCBF29CE484222325ULL);
    CHECK(fnv1a64("a") == 0xAF63DC4C8601EC8CULL);
    CHECK(fnv1a64("foobar") == 0x85944171F73967E8ULL);
  }

  TEST_CASE("derived keys follow the documented recipe") {
    const std::uint64_t g = 0x9E3779B97F4A7C15ULL;
    const std::uint64_t seed = 42;
    const std::uint64_t k0 = mix64(seed + g);
    const std::uint64_t k1 = mix64(k0 ^ fnv1a64("bb84.channel"));
    CHECK(derive_stream_key(seed, "bb84.channel", 3) == mix64(k1 ^ mix64(3 + g)));
  }

  TEST_CASE("streams are distinct across module, index and seed") {
    std::set<std::uint64_t> keys;
    for (std::uint64_t seed : {0ULL, 1ULL}) {
      for (const char* m : {"a", "b", "bb84.prepare"}) {
        for (std::uint64_t i = 0; i < 4; ++i) keys.insert(derive_stream_key(seed, m, i));
      }
    }
    CHECK(keys.size() == 24);
  }

  TEST_CASE("a new stream leaves existing draws unchanged") {
    RngStream a = derive_stream(9, "bb84.prepare");
    std::vector<std::uint64_t> before;
    for (int i = 0; i < 16; ++i) before.push_back(a.next_u64());
    RngStream extra = derive_stream(9, "new.module");
    (void)extra.next_u64();
    RngStream again = derive_stream(9, "bb84.prepare");
    for (auto v : before) CHECK(again.next_u64() == v);
  }

  TEST_CASE("uniform lies in [0,1) and has mean 1/2") {
    RngStream s(5);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double u = s.uniform();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      sum += u;
    }
    CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  }

  TEST_CASE("uniform_index is unbiased") {
    RngStream s(11);
    std::array<std::size_t, 3> counts{};
    const std::size_t n = 300000;
    for (std::size_t i = 0; i < n; ++i) ++counts[s.uniform_index(3)];
    for (auto c : counts) {
      CHECK(oracle::chi2_1dof_p(oracle::chi2_binary(c, n, 1.0 / 3.0)) > 0.001);
    }
  }

  TEST_CASE("normal has zero mean and unit variance") {
    RngStream s(17);
    const int n = 200000;
    double m = 0.0, v = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = s.normal();
      m += x;
      v += x * x;
    }
    m /= n;
    v = v / n - m * m;
    CHECK(std::abs(m) < 4.0 / std::sqrt(n));
    CHECK(std::abs(v - 1.0) < 4.0 * std::sqrt(2.0 / n));
  }

  TEST_CASE("exponential mean is 1/rate") {
    RngStream s(23);
    const int n = 200000;
    const double rate = 4.0;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += s.exponential(rate);
    CHECK(std::abs(sum / n - 0.25) < 4.0 * 0.25 / std::sqrt(n));
  }

  TEST_CASE("counter tracks draws") {
    RngStream s(1);
    CHECK(s.counter() == 0);
    (void)s.uniform();
    (void)s.normal();
    CHECK(s.counter() == 3);
  }
}
