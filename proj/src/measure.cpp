#include "selkov/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "selkov/stats.hpp"

namespace selkov {

namespace {

void require_nonempty(const std::vector<State>& samples) {
  if (samples.empty()) throw Error(ErrorKind::EmptyMeasure, "empirical measure needs at least one sample");
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(std::vector<State> samples) : samples_(std::move(samples)) {
  require_nonempty(samples_);
  weights_.assign(samples_.size(), 1.0 / static_cast<double>(samples_.size()));
  for (const State& s : samples_) {
    if (s.truncation() != samples_.front().truncation())
      throw Error(ErrorKind::MismatchedShapes, "empirical measure samples differ in truncation");
  }
}

EmpiricalMeasure::EmpiricalMeasure(std::vector<State> samples, std::vector<double> weights)
    : samples_(std::move(samples)), weights_(std::move(weights)) {
  require_nonempty(samples_);
  if (weights_.size() != samples_.size())
    throw Error(ErrorKind::MismatchedShapes, "one weight per sample expected");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorKind::EmptyMeasure, "weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorKind::EmptyMeasure, "weights must sum to 1");
  for (const State& s : samples_) {
    if (s.truncation() != samples_.front().truncation())
      throw Error(ErrorKind::MismatchedShapes, "empirical measure samples differ in truncation");
  }
}

EmpiricalMeasure EmpiricalMeasure::resized(int n) const {
  std::vector<State> out;
  out.reserve(samples_.size());
  for (const State& s : samples_) out.push_back(s.resized(n));
  return EmpiricalMeasure(std::move(out), weights_);
}

EmpiricalMeasure mixture(const std::vector<EmpiricalMeasure>& parts, const std::vector<double>& coefficients) {
  if (parts.empty()) throw Error(ErrorKind::EmptyMeasure, "mixture of no measures");
  if (coefficients.size() != parts.size())
    throw Error(ErrorKind::MismatchedShapes, "one mixture coefficient per measure expected");
  const double total = std::accumulate(coefficients.begin(), coefficients.end(), 0.0);
  if (!(total > 0.0)) throw Error(ErrorKind::EmptyMeasure, "mixture coefficients sum to zero");
  std::vector<State> samples;
  std::vector<double> weights;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    for (std::size_t j = 0; j < parts[k].size(); ++j) {
      samples.push_back(parts[k].sample(j));
      weights.push_back(coefficients[k] / total * parts[k].weight(j));
    }
  }
  // Renormalize away the rounding of the products.
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= wsum;
  return EmpiricalMeasure(std::move(samples), std::move(weights));
}

EmpiricalMeasure mixture(const std::vector<EmpiricalMeasure>& parts) {
  return mixture(parts, std::vector<double>(parts.size(), 1.0));
}

EmpiricalMeasure krylov_bogolyubov_measure(const std::vector<State>& states, std::size_t burn_in,
                                           std::size_t thinning) {
  if (thinning == 0) throw Error(ErrorKind::EmptyWindow, "thinning must be positive");
  if (states.size() <= burn_in) throw Error(ErrorKind::EmptyWindow, "burn-in consumes the whole trajectory");
  const std::size_t n = (states.size() - burn_in) / thinning;
  if (n == 0) throw Error(ErrorKind::EmptyWindow, "no states left after thinning");
  std::vector<State> samples;
  samples.reserve(n);
  for (std::size_t j = 0; j < n; ++j) samples.push_back(states[burn_in + j * thinning]);
  return EmpiricalMeasure(std::move(samples));
}

EmpiricalMeasure krylov_bogolyubov_measure(const Trajectory& trajectory, std::size_t burn_in,
                                           std::size_t thinning) {
  return krylov_bogolyubov_measure(trajectory.states, burn_in, thinning);
}

std::size_t default_burn_in(const WeightedGeometry& g, const std::vector<State>& states) {
  const std::size_t len = states.size();
  if (len == 0) throw Error(ErrorKind::EmptyWindow, "empty trajectory");
  const std::size_t fifth = len / 5;
  const std::size_t window = std::max<std::size_t>(10, len / 20);
  std::vector<double> running(len);
  double acc = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    acc += weighted_norm_sq(g, states[k]);
    running[k] = acc / static_cast<double>(k + 1);
  }
  for (std::size_t k = window; k < len; ++k) {
    const auto [lo, hi] = std::minmax_element(running.begin() + static_cast<std::ptrdiff_t>(k - window),
                                              running.begin() + static_cast<std::ptrdiff_t>(k + 1));
    if (*hi - *lo <= 0.01 * std::abs(running[k])) return std::max(fifth, k);
  }
  return std::max(fifth, len / 2);
}

MeasureSummary summarize(const WeightedGeometry& g, const EmpiricalMeasure& mu) {
  MeasureSummary s;
  s.mean_norm = mu.expect([&](const State& x) { return std::sqrt(weighted_norm_sq(g, x)); });
  s.second_moment = mu.expect([&](const State& x) { return weighted_norm_sq(g, x); });
  const State c = barycenter(mu);
  s.sample_variance = mu.expect([&](const State& x) {
    const double d = weighted_distance(g, x, c);
    return d * d;
  });
  return s;
}

State barycenter(const EmpiricalMeasure& mu) {
  const State& first = mu.sample(0);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(first.u.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(first.v.size());
  for (std::size_t k = 0; k < mu.size(); ++k) {
    u += mu.weight(k) * mu.sample(k).u.values();
    v += mu.weight(k) * mu.sample(k).v.values();
  }
  return {Field(std::move(u), first.boundary()), Field(std::move(v), first.boundary())};
}

MarginalKS marginal_ks(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  const int n = std::max(a.truncation(), b.truncation());
  MarginalKS out;
  std::vector<double> xa(a.size()), xb(b.size());
  int count = 0;
  double total = 0.0;
  for (int species = 0; species < 2; ++species) {
    for (int i = -n; i <= n; ++i) {
      for (std::size_t k = 0; k < a.size(); ++k) {
        const State& s = a.sample(k);
        xa[k] = species == 0 ? s.u.extended(i) : s.v.extended(i);
      }
      for (std::size_t k = 0; k < b.size(); ++k) {
        const State& s = b.sample(k);
        xb[k] = species == 0 ? s.u.extended(i) : s.v.extended(i);
      }
      const double d = ks_statistic(xa, a.weights(), xb, b.weights());
      out.max_statistic = std::max(out.max_statistic, d);
      total += d;
      ++count;
    }
  }
  out.mean_statistic = total / count;
  return out;
}

}  // namespace selkov
