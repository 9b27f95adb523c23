#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace hhlc {

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x);

// Derive a child seed from a parent seed and a list of stream coordinates.
// Stable across platforms and thread schedules.
template <typename... Ts>
std::uint64_t derive_seed(std::uint64_t seed, Ts... coords) {
  std::uint64_t h = mix_seed(seed);
  ((h = mix_seed(h ^ (static_cast<std::uint64_t>(coords) + 0x9e3779b97f4a7c15ULL))), ...);
  return h;
}

// Thin wrapper over mt19937_64 with distribution code that does not depend on
// the standard library's (implementation-defined) distributions, so streams
// are reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hhlc
