// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace spt {

// splitmix64 (Vigna, public domain). Used for seeding and key mixing.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Mixes words into a single 64-bit key, e.g. (global seed, utterance index).
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t s = a;
  uint64_t k = splitmix64(s);
  s ^= b + 0x9e3779b97f4a7c15ULL + (k << 6) + (k >> 2);
  return splitmix64(s);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

// xoshiro256** seeded via splitmix64. All stochastic behavior in this
// project flows through this generator so runs are reproducible from a
// single integer seed, independent of the platform's std::mt19937 etc.
class Rng {
 public:
  Rng() : Rng(0) {}

  explicit Rng(uint64_t seed) {
    uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  static Rng from_state(const std::array<uint64_t, 4>& state) {
    Rng r;
    r.state_ = state;
    return r;
  }

  const std::array<uint64_t, 4>& state() const { return state_; }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
  }

  // Uniform integer in [0, n), unbiased via rejection.
  uint64_t next_below(uint64_t n) {
    if (n <= 1) return 0;
    const uint64_t threshold = (0 - n) % n;
    for (;;) {
      const uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Standard normal via the Marsaglia polar method. The usual spare value
  // is discarded so the four state words fully determine the stream;
  // checkpoints persist exactly those words.
  double next_gaussian() {
    double u, v, s;
    do {
      u = 2.0 * next_double() - 1.0;
      v = 2.0 * next_double() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return u * std::sqrt(-2.0 * std::log(s) / s);
  }

  // Independent child stream; advances this generator by one draw.
  Rng fork() { return Rng(next_u64()); }

  // Partial Fisher-Yates: first k of a random permutation of [0, n).
  template <typename IntOut>
  void sample_without_replacement(uint64_t n, uint64_t k, std::vector<IntOut>& out) {
    std::vector<IntOut> pool(n);
    for (uint64_t i = 0; i < n; ++i) pool[i] = static_cast<IntOut>(i);
    out.clear();
    out.reserve(k);
    for (uint64_t i = 0; i < k; ++i) {
      const uint64_t j = i + next_below(n - i);
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<uint64_t, 4> state_{};
};

}  // namespace spt
