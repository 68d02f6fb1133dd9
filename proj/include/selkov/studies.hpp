#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "selkov/distance.hpp"
#include "selkov/measure.hpp"
#include "selkov/reports.hpp"

namespace selkov {

/// How one numerical invariant measure is built: n_chains independent chains
/// from psi0, each discarding burn_in_samples and keeping samples_per_chain
/// states spaced sample_interval apart in physical time. The pooled samples
/// carry equal weight.
struct MeasureProtocol {
  double sample_interval = 1.0;
  std::size_t burn_in_samples = 10;
  std::size_t samples_per_chain = 50;
  std::size_t n_chains = 8;
  BLOptions distance{};
};

struct StudySeeds {
  std::uint64_t root_seed = 0;
  std::size_t n_replicates = 3;
  int workers = 1;
};

/// One observation in long format; NaN marks an absent interval.
struct StudyRow {
  std::string study;
  double dt = 0.0;
  int n = 0;
  std::uint64_t seed = 0;
  std::string statistic;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// A monotone-trend claim over a sequence of summary values.
struct Trend {
  std::string name;
  std::vector<double> values;
  std::vector<double> half_widths;
  bool strictly_decreasing = false;
  bool non_increasing = false;
};

Trend make_trend(std::string name, const std::vector<Estimate>& estimates);

struct StudyReport {
  std::string study;
  std::vector<StudyRow> rows;
  std::vector<Trend> trends;

  const Trend* trend(const std::string& name) const;
  /// Rows with the given statistic, in insertion order.
  std::vector<StudyRow> select(const std::string& statistic) const;
};

/// Seed reported for replicate r.
std::uint64_t replicate_seed(std::uint64_t root_seed, StudyId study, std::size_t replicate);

/// Numerical invariant measure of one (dt, N) configuration. Chain c of
/// replicate r shares its Brownian path, at base step base_dt, with every
/// other configuration built from the same (study, r, c).
EmpiricalMeasure invariant_measure(const ModelParams& params, const SchemeConfig& cfg, const State& psi0,
                                   const MeasureProtocol& protocol, std::uint64_t root_seed, StudyId study,
                                   std::size_t replicate, double base_dt, int workers = 1);

/// Distances between measures at successive steps of a decreasing dt grid,
/// with moment-summary deltas and marginal KS statistics.
StudyReport dt_refinement_study(const ModelParams& params, const SchemeConfig& base_cfg,
                                const std::vector<double>& dt_grid, const State& psi0,
                                const MeasureProtocol& protocol, const StudySeeds& seeds);

struct ExceedanceProtocol {
  std::size_t step = 100;       // m at which the coupled gap is read
  double eta = 1e-3;            // gap threshold
  std::size_t n_streams = 200;
};

/// (a) P(gap_m >= eta) for coupled pairs (N, n_ref); (b) distances between the
/// measure at N, zero-extended, and the measure at n_ref.
StudyReport n_refinement_study(const ModelParams& params, const SchemeConfig& cfg,
                               const std::vector<int>& n_grid, int n_ref, const State& psi0,
                               const MeasureProtocol& protocol, const ExceedanceProtocol& exceedance,
                               const StudySeeds& seeds);

/// Distances from every (dt, N) cell to the (min dt, max N) reference.
StudyReport double_limit_study(const ModelParams& params, const SchemeConfig& cfg,
                               const std::vector<double>& dt_grid, const std::vector<int>& n_grid,
                               const State& psi0, const MeasureProtocol& protocol, const StudySeeds& seeds);

}  // namespace selkov
