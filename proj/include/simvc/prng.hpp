#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace simvc {

/// FNV-1a 64-bit hash. Used for stable id-to-seed mixing and artifact
/// fingerprints; fixed here so recorded values stay portable.
inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t mix_seed(uint64_t seed, std::string_view tag) {
  char buf[32];
  int n = std::snprintf(buf, sizeof(buf), "%llu", static_cast<unsigned long long>(seed));
  uint64_t h = fnv1a64(std::string_view(buf, static_cast<size_t>(n)));
  return fnv1a64(tag, h);
}

/// Deterministic sampling PRNG.
///
/// Algorithm (fixed so golden traces are portable across implementations):
///   * engine: std::mt19937_64 seeded directly with the 64-bit seed
///     (the engine's output sequence is pinned by the C++ standard);
///   * bounded draws `below(n)`: draw 64-bit words, reject any word below
///     2^64 mod n, return word % n (unbiased rejection sampling);
///   * uniform doubles: (word >> 11) * 2^-53;
///   * sampling without replacement: partial Fisher-Yates over the input
///     order, taking positions i = 0..k-1 with j = i + below(size - i).
class Rng {
public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next() { return engine_(); }

  uint64_t below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    const uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller on two uniform draws.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform sample of k items without replacement, preserving the draw
  /// order of the partial Fisher-Yates walk. Returns the whole input when
  /// k >= items.size().
  template <typename T>
  std::vector<T> sample(std::vector<T> items, size_t k) {
    const size_t n = items.size();
    if (k >= n) return items;
    for (size_t i = 0; i < k; ++i) {
      const size_t j = i + static_cast<size_t>(below(n - i));
      std::swap(items[i], items[j]);
    }
    items.resize(k);
    return items;
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    if (items.empty()) return;
    for (size_t i = items.size() - 1; i > 0; --i) {
      const size_t j = static_cast<size_t>(below(i + 1));
      std::swap(items[i], items[j]);
    }
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace simvc
