#pragma once

// Counter-based random numbers keyed by 64-bit hashes.
//
// Every random quantity in the library is a pure function of a key derived
// from (master seed, tree address, replica, ...) and a draw counter, so values
// can be produced lazily, out of order, and from any number of threads with
// bit-identical results.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace qtree::rng {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Order-sensitive combination of a running key with one more word.
constexpr std::uint64_t combine(std::uint64_t key, std::uint64_t value) noexcept {
  return mix64(key ^ mix64(value + 0x632be59bd9b4e019ULL));
}

// Domain-separation tags so that streams for different purposes never share
// keys even when their numeric inputs coincide.
inline constexpr std::uint64_t kTagAddress = 0x41444452ULL;  // "ADDR"
inline constexpr std::uint64_t kTagReplica = 0x5245504cULL;  // "REPL"
inline constexpr std::uint64_t kTagPool = 0x504f4f4cULL;     // "POOL"
inline constexpr std::uint64_t kTagEnergy = 0x454e5247ULL;   // "ENRG"
inline constexpr std::uint64_t kTagJensen = 0x4a454e53ULL;   // "JENS"

class CounterStream {
 public:
  explicit constexpr CounterStream(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t next_u64() noexcept { return mix64(key_ ^ mix64(counter_++)); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform index in [0, n) via multiply-shift; n must be below 2^32.
  std::uint64_t index(std::uint64_t n) noexcept {
    return ((next_u64() >> 32) * n) >> 32;
  }

  /// Standard normal by Box-Muller (one value per two uniforms).
  double normal() noexcept {
    const double u1 = uniform_open();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace qtree::rng
