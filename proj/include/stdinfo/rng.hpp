#pragma once

#include <cstdint>
#include <random>

namespace stdinfo {

/// Seeded random source. Uniforms come from the top 53 bits of a
/// mt19937_64 draw; normals use the Marsaglia polar method. Both are fully
/// specified here so streams are reproducible across standard libraries.
///
/// Independent streams are derived from (seed, stream id) by a splitmix64
/// mix, so replication r of an experiment always sees the same draws no
/// matter which thread runs it.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

  /// Derives a child seed; used to split a stream into sub-streams.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream_id);

  /// Uniform on [0,1).
  double uniform();
  /// Uniform on (0,1).
  double uniform_open();
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace stdinfo
