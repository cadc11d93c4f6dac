#pragma once

#include <bit>
#include <cstdint>
#include <random>
#include <string_view>

namespace cfr {

// Seedable deterministic random stream. One Rng per generation/training
// task; never shared across threads. Reproducibility contract is per-seed
// within one build of this library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }

  // Uniform in [0, 1).
  double uniform01() { return unit_(engine_); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }

  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

// Order-sensitive seed mixing. Derived seeds are pure functions of the
// mixed-in values, so any execution order or degree of parallelism that
// derives the same chain gets the same stream.
inline std::uint64_t seed_mix(std::uint64_t h, std::uint64_t v) {
  return detail::splitmix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

inline std::uint64_t seed_mix(std::uint64_t h, std::string_view s) {
  std::uint64_t f = 0xcbf29ce484222325ULL;  // FNV-1a over the bytes
  for (unsigned char c : s) {
    f ^= c;
    f *= 0x100000001b3ULL;
  }
  return seed_mix(h, f);
}

inline std::uint64_t seed_mix(std::uint64_t h, double v) {
  return seed_mix(h, std::bit_cast<std::uint64_t>(v));
}

}  // namespace cfr
