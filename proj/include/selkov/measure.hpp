#pragma once

#include <cstddef>
#include <vector>

#include "selkov/lattice.hpp"
#include "selkov/model.hpp"
#include "selkov/scheme.hpp"

namespace selkov {

/// Finitely supported probability measure on lattice states of one truncation.
class EmpiricalMeasure {
 public:
  /// Uniform weights.
  explicit EmpiricalMeasure(std::vector<State> samples);
  /// Weights must be nonnegative and sum to 1 within 1e-12.
  EmpiricalMeasure(std::vector<State> samples, std::vector<double> weights);

  static EmpiricalMeasure dirac(State s) { return EmpiricalMeasure(std::vector<State>{std::move(s)}); }

  std::size_t size() const noexcept { return samples_.size(); }
  int truncation() const noexcept { return samples_.front().truncation(); }
  const std::vector<State>& samples() const noexcept { return samples_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const State& sample(std::size_t k) const { return samples_[k]; }
  double weight(std::size_t k) const { return weights_[k]; }

  /// Integral of f against the measure.
  template <typename Fn>
  double expect(Fn&& f) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < samples_.size(); ++k) acc += weights_[k] * f(samples_[k]);
    return acc;
  }

  /// Push-forward under zero-extension (n larger) or restriction to |i| <= n.
  EmpiricalMeasure resized(int n) const;

 private:
  std::vector<State> samples_;
  std::vector<double> weights_;
};

/// Convex combination sum_k c_k mu_k; coefficients are normalized.
EmpiricalMeasure mixture(const std::vector<EmpiricalMeasure>& parts, const std::vector<double>& coefficients);
/// Equal-weight mixture.
EmpiricalMeasure mixture(const std::vector<EmpiricalMeasure>& parts);

/// Time average over the stored states psi_{burn_in + j k}, j = 0..n-1 with
/// n = floor((len - burn_in) / k), each with weight 1/n. burn_in and thinning
/// count stored states, not scheme steps.
EmpiricalMeasure krylov_bogolyubov_measure(const std::vector<State>& states, std::size_t burn_in,
                                           std::size_t thinning = 1);
EmpiricalMeasure krylov_bogolyubov_measure(const Trajectory& trajectory, std::size_t burn_in,
                                           std::size_t thinning = 1);

/// Later of 20% of the stored states and the first index after which the
/// running mean of ||psi||_X^2 stays within 1% over a trailing window of
/// max(10, len/20) states. Falls back to len/2 if the mean never settles.
std::size_t default_burn_in(const WeightedGeometry& g, const std::vector<State>& states);

struct MeasureSummary {
  double mean_norm = 0.0;       // E ||psi||_X
  double second_moment = 0.0;   // E ||psi||_X^2
  double sample_variance = 0.0; // E ||psi - E psi||_X^2
};

MeasureSummary summarize(const WeightedGeometry& g, const EmpiricalMeasure& mu);

/// Weighted mean state.
State barycenter(const EmpiricalMeasure& mu);

struct MarginalKS {
  double max_statistic = 0.0;   // over sites and species
  double mean_statistic = 0.0;
};

/// Per-site two-sample Kolmogorov-Smirnov statistics of the u and v marginals,
/// on the common sites after zero-extension.
MarginalKS marginal_ks(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

}  // namespace selkov
