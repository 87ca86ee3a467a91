#pragma once

#include <cstdint>

namespace tshrink {

/// splitmix64 step (Steele, Lea & Flood). Used only to expand seed material.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256++ (Blackman & Vigna, public domain). One independent instance
/// per (seed, chain, unit) stream keeps draws reproducible under any
/// scheduling and makes per-unit streams cheap (32 bytes of state).
class Xoshiro256pp {
public:
  using result_type = std::uint64_t;

  Xoshiro256pp() : Xoshiro256pp(0) {}

  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9e3779b97f4a7c15ULL;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

/// Seed material for a named substream. Stirring each component through
/// splitmix64 decorrelates streams that differ in a single field.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t domain, std::uint64_t index) {
  std::uint64_t sm = seed;
  std::uint64_t acc = splitmix64(sm);
  sm = acc ^ (domain * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
  acc = splitmix64(sm);
  sm = acc ^ (index * 0xda942042e4dd58b5ULL + 0x9e3779b97f4a7c15ULL);
  return splitmix64(sm);
}

}  // namespace tshrink
