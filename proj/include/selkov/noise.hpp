#pragma once

#include <cstdint>

namespace selkov {

/// SplitMix64 finalizer; the mixing primitive behind all seeding.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept {
  return mix64(seed ^ mix64(value + 0x632BE59BD9B4E019ull));
}

/// Trajectory seed = hash(root_seed, study_id, replicate, trajectory_index).
constexpr std::uint64_t derive_seed(std::uint64_t root_seed, std::uint64_t study_id,
                                    std::uint64_t replicate, std::uint64_t trajectory_index) noexcept {
  return hash_combine(hash_combine(hash_combine(mix64(root_seed), study_id), replicate),
                      trajectory_index);
}

/// Standard normal variate indexed by (seed, trajectory_id, counter). Counter
/// based, so any increment can be regenerated without replaying the stream.
double standard_normal(std::uint64_t seed, std::uint64_t trajectory_id, std::uint64_t counter) noexcept;

/// Scalar Wiener increments Delta W_m ~ N(0, dt) for one trajectory.
///
/// The path is defined on a base grid of width dt / substeps: the increment of
/// step m sums base increments m*substeps .. (m+1)*substeps - 1. Two streams with
/// the same (seed, trajectory_id) and the same base width therefore sample the
/// same Brownian path at different resolutions.
struct NoiseStream {
  std::uint64_t seed = 0;
  std::uint64_t trajectory_id = 0;
  double dt = 1.0;
  int substeps = 1;

  double increment(std::uint64_t m) const noexcept;

  /// Stream for step width substeps_new * base width on the same Brownian path.
  NoiseStream with_substeps(int substeps_new) const noexcept;

  double base_dt() const noexcept { return dt / substeps; }
};

}  // namespace selkov
