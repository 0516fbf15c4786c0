#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace surrosim {

/// Reproducible pseudo-random stream. Uniform and normal variates are
/// produced by explicit transforms of the 64-bit engine output, so a stream
/// gives the same draws on every standard library.
class Stream {
 public:
  explicit Stream(std::seed_seq& seq);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform();

  /// Standard normal (Box-Muller, one variate per pair of uniforms).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Uniform integer in [0, n), unbiased.
  std::size_t uniform_index(std::size_t n);

  bool operator==(const Stream& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Replicate slot reserved for the per-cell calibration pilot.
inline constexpr std::uint64_t kCalibrationReplicate = ~std::uint64_t{0};

/// Independent stream for one (seed, cell, replicate) triple. Pure: the same
/// triple always yields the same stream.
Stream derive_stream(std::uint64_t master_seed, std::uint64_t cell_index,
                     std::uint64_t replicate);

/// Mixes a label (scenario name, stage tag) into a seed.
std::uint64_t mix_seed(std::uint64_t seed, std::string_view label);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace surrosim
