#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>

namespace picap {

/// Seeded random source used by every generator in the core.
///
/// Bounded draws are computed here rather than through
/// std::uniform_int_distribution, whose output is implementation-defined;
/// this keeps challenges byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be nonzero.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

  /// Lowercase hex string of `bytes` random bytes.
  std::string hex_token(std::size_t bytes);

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer applied to a combination of two values; used to derive
/// independent per-trial and per-challenge seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

/// 64 bits from the operating system CSPRNG.
std::uint64_t secure_seed();

}  // namespace picap
