// Portable, seedable random streams.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The standard distributions are not portable, so every draw used
// by the toolkit goes through the helpers here.
//
// Stream splitting: stream `index` of a run with seed `seed` is an engine
// seeded with splitmix64(seed ^ splitmix64(index + 1)). Dataset image i and
// sample-params record i both use stream i, so output does not depend on the
// order or thread in which indices are processed.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace bcdk {

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng for_stream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform01();

  // Uniform on [a, b); returns a when a == b. Consumes exactly one draw.
  double uniform(double a, double b);

  // Unbiased integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bcdk
