#ifndef TEXTRGCN_RANDOM_HPP
#define TEXTRGCN_RANDOM_HPP

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace textrgcn {

// Seed for a named substream ("init", "dropout", "balance", "split", ...).
// Stable across platforms and runs: FNV-1a of the name mixed with the base
// seed through splitmix64.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream,
                          std::uint64_t index);

/// Portable random source.
///
/// std::mt19937_64 output is fully specified by the standard, but the
/// std::*_distribution adaptors are not, so the draws used here are derived
/// from raw engine bits to keep results identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace textrgcn

#endif  // TEXTRGCN_RANDOM_HPP
