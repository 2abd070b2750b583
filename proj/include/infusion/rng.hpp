#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace infusion {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_name(std::string_view name) {
  // FNV-1a, used to derive per-purpose rng streams from a label.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Deterministic generator. The engine is std::mt19937_64 (bit-exact by the
// standard); all distributions are derived here from raw bits so sequences
// do not depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t s = seed;
    engine_.seed(splitmix64(s));
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next() { return engine_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  std::uint64_t uniform_index(std::uint64_t n) { return next() % n; }

  // Box-Muller; always consumes exactly two uniforms.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Independent child stream for a named purpose, so consuming draws in one
  // stream never perturbs another. Derivation uses only the root seed, not
  // the engine position.
  Rng stream(std::string_view name) const {
    std::uint64_t s = seed_ ^ (hash_name(name) | 1ull);
    std::uint64_t mixed = splitmix64(s);
    return Rng(mixed ^ splitmix64(s));
  }

  Rng stream(std::uint64_t id) const {
    std::uint64_t s = seed_ ^ (id * 0x9e3779b97f4a7c15ull + 0x632be59bd9b4e019ull);
    std::uint64_t mixed = splitmix64(s);
    return Rng(mixed ^ splitmix64(s));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace infusion
