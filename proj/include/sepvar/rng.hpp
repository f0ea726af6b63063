#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace sepvar {

/// SplitMix64 step. Advances `state` and returns the next output.
std::uint64_t splitmix64(std::uint64_t& state);

/// Seeded random source used by every stochastic routine in the library.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The distribution transforms below are written out here instead of
/// using <random> distributions, whose algorithms are implementation-defined,
/// so a given seed yields the same numbers with any conforming toolchain.
///
/// Independent streams are obtained with split(): the child seed is the
/// SplitMix64 hash of (parent seed, stream id). Streams never share state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random mantissa bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal, Marsaglia polar method.
  double normal();

  /// Index i with probability proportional to the increments of `cdf`.
  /// `cdf` must be non-decreasing; its last entry is the total mass.
  std::size_t categorical(std::span<const double> cdf);

  Rng split(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Seed derivation shared by split(): deterministic, platform independent.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace sepvar
