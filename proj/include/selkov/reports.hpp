#pragma once

#include <cstdint>
#include <vector>

#include "selkov/errors.hpp"
#include "selkov/scheme.hpp"
#include "selkov/stats.hpp"

namespace selkov {

/// Study identifiers feed the seed derivation, so they are part of the
/// reproducibility contract and must not be renumbered.
enum class StudyId : std::uint64_t {
  Simulate = 1,
  Moments = 2,
  Tails = 3,
  Invariant = 4,
  DtStudy = 5,
  NStudy = 6,
  DoubleLimit = 7,
};

struct MonteCarlo {
  std::size_t n_trajectories = 1000;
  std::size_t horizon = 200;  // scheme steps
  std::uint64_t root_seed = 0;
  std::uint64_t replicate = 0;
  int workers = 1;
};

/// Noise stream of trajectory k in the given study and replicate.
NoiseStream trajectory_stream(const MonteCarlo& mc, StudyId study, std::uint64_t k, double dt);

/// lambda > 16 beta^2 and dt < 1/(4 lambda); empty when both hold.
std::vector<Violation> bound_conditions(const ModelParams& params, double dt);

/// ||psi_0||_X^2 exp(m ln(1 - lambda dt / 4)) + M.
double moment_bound(const ModelParams& params, double dt, double psi0_norm_sq, std::size_t m);

struct MomentReport {
  std::vector<std::size_t> m_grid;
  std::vector<Estimate> estimated;  // E ||psi_m||_X^2 with 95% intervals
  std::vector<double> bound;
  std::vector<bool> violated;       // estimate - half_width > bound
  double M = 0.0;
  double log_decay = 0.0;           // ln(1 - lambda dt / 4)
  double psi0_norm_sq = 0.0;
  std::size_t n_trajectories = 0;

  bool any_violation() const;
};

/// Throws Error(ConfigRejected) unless bound_conditions hold.
MomentReport check_moment_bound(const ModelParams& params, const SchemeConfig& cfg, const State& psi0,
                                const MonteCarlo& mc);

struct TailReport {
  std::vector<int> I_grid;  // sorted ascending
  std::vector<std::size_t> m_grid;
  // tail_mass[m][k]: E sum_{|i| > I_k} (b2 u_{m,i}^2 + b1 v_{m,i}^2)
  std::vector<std::vector<Estimate>> tail_mass;
  std::size_t monotone_failures = 0;  // (run, m) pairs where a tail grew with I
  std::size_t n_trajectories = 0;

  /// Smallest cutoff whose mean tail at step m is below eta, or -1.
  int empirical_threshold(std::size_t m, double eta) const;
};

/// Throws Error(ConfigRejected) if a cutoff is negative or not below N.
TailReport check_tail_bound(const ModelParams& params, const SchemeConfig& cfg, const State& psi0,
                            const MonteCarlo& mc, std::vector<int> I_grid);

}  // namespace selkov
