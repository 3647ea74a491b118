#ifndef NESTEDAA_RNG_HPP
#define NESTEDAA_RNG_HPP

#include <cstdint>
#include <initializer_list>

namespace nestedaa {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Folds a list of integers into one 64-bit key. Order matters.
constexpr std::uint64_t fold_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t key = 0x6A09E667F3BCC909ULL;
  for (auto p : parts) {
    key = mix64(key ^ mix64(p + 0x9E3779B97F4A7C15ULL));
  }
  return key;
}

/// Counter-based generator: the j-th output is mix64(key + (j+1) * gamma)
/// with gamma = 0x9E3779B97F4A7C15. Identical on every platform, and all
/// derived distributions below use only integer arithmetic or exact
/// 53-bit conversions, so streams are reproducible bit for bit.
class CounterRng {
public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGamma);
  }

  /// Uniform integer in [lo, hi]: rejection sampling, then modulo.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t span = hi - lo;
    if (span == ~0ULL) {
      return next_u64();
    }
    const std::uint64_t range = span + 1;
    // Largest multiple of range that fits; reject above it.
    const std::uint64_t limit = (~0ULL / range) * range;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return lo + v % range;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Independent child stream; does not advance this generator.
  CounterRng split(std::uint64_t tag) const {
    return CounterRng(fold_key({key_, tag}));
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

} // namespace nestedaa

#endif // NESTEDAA_RNG_HPP
