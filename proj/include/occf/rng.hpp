#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace occf {

// splitmix64 finalizer; used to derive independent stream seeds from a root.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive a child seed from `root` along a path of integers, e.g.
/// derive_seed(root, {replicate, purpose}). Different paths give
/// statistically independent streams; the result never depends on the
/// order in which streams are consumed.
inline std::uint64_t derive_seed(std::uint64_t root,
                                 std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t s = mix64(root);
  for (std::uint64_t p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

// Purposes used as the last element of a derive_seed path.
enum class Stream : std::uint64_t {
  model = 1,
  environment = 2,
  algorithm = 3,
  schedule = 4,
  split = 5,
  staging = 6,
  responses = 7,
  hidden_ratings = 8,
};

constexpr std::uint64_t stream_id(Stream s) noexcept { return static_cast<std::uint64_t>(s); }

/// 64-bit Mersenne Twister with portable sampling helpers. The std
/// distributions are implementation-defined, so draws are done here to keep
/// traces identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, n); n > 0. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  template <class It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = below(i);
      std::iter_swap(first + (i - 1), first + j);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Stateless uniform in [0,1) keyed by (seed, a, b); used for hidden ratings
// that stay fixed per (user, item).
inline double hashed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
  const std::uint64_t h = mix64(mix64(seed ^ mix64(a)) ^ mix64(b + 0x1234567ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace occf
