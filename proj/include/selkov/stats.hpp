#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

namespace selkov {

struct Estimate {
  double mean = 0.0;
  double half_width = 0.0;  // of the two-sided confidence interval
  std::size_t count = 0;

  double low() const noexcept { return mean - half_width; }
  double high() const noexcept { return mean + half_width; }
};

/// Sample mean with a Student-t interval. One sample gives a zero-width interval.
Estimate mean_estimate(std::span<const double> values, double level = 0.95);

/// Running sums for many statistics at once, one column per statistic.
class EnsembleAccumulator {
 public:
  explicit EnsembleAccumulator(Eigen::Index columns)
      : sum_(Eigen::VectorXd::Zero(columns)), sum_sq_(Eigen::VectorXd::Zero(columns)) {}

  void add(const Eigen::Ref<const Eigen::VectorXd>& row) {
    sum_ += row;
    sum_sq_ += row.cwiseAbs2();
    ++count_;
  }
  void merge(const EnsembleAccumulator& other) {
    sum_ += other.sum_;
    sum_sq_ += other.sum_sq_;
    count_ += other.count_;
  }

  std::size_t count() const noexcept { return count_; }
  Estimate estimate(Eigen::Index column, double level = 0.95) const;

 private:
  Eigen::VectorXd sum_;
  Eigen::VectorXd sum_sq_;
  std::size_t count_ = 0;
};

/// Two-sided Student-t critical value t_{(1+level)/2, dof}.
double t_critical(std::size_t dof, double level = 0.95);

/// sup_x |F_1(x) - F_2(x)| between weighted empirical distribution functions.
double ks_statistic(std::span<const double> x1, std::span<const double> w1,
                    std::span<const double> x2, std::span<const double> w2);

}  // namespace selkov
