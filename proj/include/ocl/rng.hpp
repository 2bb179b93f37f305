#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "ocl/error.hpp"

namespace ocl {

// splitmix64 and xoshiro256++ are used instead of <random> engines/distributions
// so that every generated stream is bit-identical across platforms and compilers.

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr uint64_t fnv1a64(const char* s) {
  uint64_t h = 0xCBF29CE484222325ull;
  while (*s) {
    h ^= static_cast<uint64_t>(static_cast<unsigned char>(*s++));
    h *= 0x100000001B3ull;
  }
  return h;
}

// Derives an independent sub-stream seed from a base seed and a list of
// integer coordinates (purpose tag, task id, item index, ...).
inline uint64_t sub_seed(uint64_t seed, std::initializer_list<uint64_t> parts) {
  uint64_t s = seed;
  uint64_t h = splitmix64(s);
  for (uint64_t p : parts) {
    s = h ^ (p + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2));
    h = splitmix64(s);
  }
  return h;
}

class Xoshiro256 {
 public:
  explicit Xoshiro256(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  uint64_t next() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform double in [0, 1), 53 bits
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [lo, hi], inclusive, rejection-sampled (no modulo bias)
  int uniform_int(int lo, int hi) {
    OCL_CHECK(lo <= hi, ConfigError, "uniform_int: empty range [" << lo << ", " << hi << "]");
    const uint64_t span = static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo) + 1;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t x = next();
    while (x >= limit) x = next();
    return lo + static_cast<int>(x % span);
  }

  // standard normal via the polar method (no trig; trig libm calls are the
  // least portable part of Box-Muller)
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  // in-place Fisher-Yates; std::shuffle is implementation-defined
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(0, static_cast<int>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ocl
