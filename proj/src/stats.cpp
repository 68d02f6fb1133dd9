#include "selkov/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "selkov/errors.hpp"

namespace selkov {

namespace {

// P(|T| <= t) for Student's t with integer dof, as the finite trigonometric series.
double t_central_mass(double t, std::size_t dof) {
  const double theta = std::atan(t / std::sqrt(static_cast<double>(dof)));
  const double s = std::sin(theta);
  const double c2 = std::cos(theta) * std::cos(theta);
  if (dof % 2 == 1) {
    double term = std::cos(theta);
    double sum = dof > 1 ? term : 0.0;
    for (std::size_t k = 3; k + 2 <= dof; k += 2) {
      term *= c2 * static_cast<double>(k - 1) / static_cast<double>(k);
      sum += term;
    }
    return 2.0 / std::numbers::pi * (theta + s * sum);
  }
  double term = 1.0;
  double sum = 1.0;
  for (std::size_t k = 2; k + 2 <= dof; k += 2) {
    term *= c2 * static_cast<double>(k - 1) / static_cast<double>(k);
    sum += term;
  }
  return s * sum;
}

}  // namespace

double t_critical(std::size_t dof, double level) {
  if (dof == 0) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (t_central_mass(hi, dof) < level) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (t_central_mass(mid, dof) < level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

Estimate from_sums(double sum, double sum_sq, std::size_t n, double level) {
  Estimate e;
  e.count = n;
  if (n == 0) return e;
  e.mean = sum / static_cast<double>(n);
  if (n < 2) return e;
  const double var = std::max(0.0, (sum_sq - sum * e.mean) / static_cast<double>(n - 1));
  e.half_width = t_critical(n - 1, level) * std::sqrt(var / static_cast<double>(n));
  return e;
}

}  // namespace

Estimate mean_estimate(std::span<const double> values, double level) {
  // Two passes: the variance of nearly constant samples must not cancel.
  Estimate e;
  e.count = values.size();
  if (values.empty()) return e;
  e.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() < 2) return e;
  double ss = 0.0;
  for (double v : values) ss += (v - e.mean) * (v - e.mean);
  const double var = ss / static_cast<double>(values.size() - 1);
  e.half_width = t_critical(values.size() - 1, level) * std::sqrt(var / static_cast<double>(values.size()));
  return e;
}

Estimate EnsembleAccumulator::estimate(Eigen::Index column, double level) const {
  return from_sums(sum_(column), sum_sq_(column), count_, level);
}

double ks_statistic(std::span<const double> x1, std::span<const double> w1,
                    std::span<const double> x2, std::span<const double> w2) {
  if (x1.size() != w1.size() || x2.size() != w2.size())
    throw Error(ErrorKind::MismatchedShapes, "ks_statistic: sample and weight lengths differ");
  struct Point {
    double x;
    double dw;
  };
  std::vector<Point> pts;
  pts.reserve(x1.size() + x2.size());
  for (std::size_t i = 0; i < x1.size(); ++i) pts.push_back({x1[i], w1[i]});
  for (std::size_t i = 0; i < x2.size(); ++i) pts.push_back({x2[i], -w2[i]});
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.x < b.x; });
  double diff = 0.0;
  double best = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    diff += pts[k].dw;
    if (k + 1 == pts.size() || pts[k + 1].x != pts[k].x) best = std::max(best, std::abs(diff));
  }
  return best;
}

}  // namespace selkov
