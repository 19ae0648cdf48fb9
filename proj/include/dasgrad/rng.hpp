#pragma once

#include <cstdint>
#include <optional>
#include <random>

namespace dasgrad {

/// Seeded 64-bit generator. Built on std::mt19937_64, whose output sequence is
/// fixed by the standard, and converts to doubles without going through the
/// implementation-defined std distributions, so a seed yields the same draws
/// on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  std::optional<double> spare_normal_;
};

}  // namespace dasgrad
