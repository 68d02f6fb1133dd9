#include "selkov/noise.hpp"

#include <cmath>
#include <numbers>

namespace selkov {

namespace {

// 53-bit uniform in (0, 1).
double open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

double standard_normal(std::uint64_t seed, std::uint64_t trajectory_id, std::uint64_t counter) noexcept {
  const std::uint64_t key = hash_combine(hash_combine(mix64(seed), trajectory_id), counter);
  const double u1 = open_unit(mix64(key));
  const double u2 = open_unit(mix64(key ^ 0xD1B54A32D192ED03ull));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double NoiseStream::increment(std::uint64_t m) const noexcept {
  const double scale = std::sqrt(base_dt());
  const auto k = static_cast<std::uint64_t>(substeps);
  double w = 0.0;
  for (std::uint64_t j = 0; j < k; ++j) w += standard_normal(seed, trajectory_id, m * k + j);
  return scale * w;
}

NoiseStream NoiseStream::with_substeps(int substeps_new) const noexcept {
  NoiseStream s = *this;
  s.dt = base_dt() * substeps_new;
  s.substeps = substeps_new;
  return s;
}

}  // namespace selkov
