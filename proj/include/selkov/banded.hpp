#pragma once

#include <Eigen/Dense>

#include <vector>

namespace selkov {

/// Square matrix with a fixed band |r - c| <= kl/ku plus a short list of
/// off-band entries (the wrap-around corners of periodic lattices).
///
/// Solves factor the band with partial-pivoting LU and fold the corners in
/// through a Sherman-Morrison-Woodbury correction.
class BandedMatrix {
 public:
  struct Entry {
    Eigen::Index row;
    Eigen::Index col;
    double value;
  };

  BandedMatrix(Eigen::Index n, int lower, int upper);

  Eigen::Index rows() const noexcept { return n_; }
  int lower() const noexcept { return kl_; }
  int upper() const noexcept { return ku_; }

  bool in_band(Eigen::Index r, Eigen::Index c) const noexcept {
    return c - r <= ku_ && r - c <= kl_;
  }

  /// Accumulates `value` at (r, c).
  void add(Eigen::Index r, Eigen::Index c, double value);

  double coeff(Eigen::Index r, Eigen::Index c) const;

  const std::vector<Entry>& corners() const noexcept { return corners_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

  Eigen::MatrixXd to_dense() const;

  /// Solves A x = b. Throws Error(SolverDiverged) on a singular pivot.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

 private:
  Eigen::Index n_;
  int kl_;
  int ku_;
  Eigen::MatrixXd band_;  // band_(r, c - r + kl_)
  std::vector<Entry> corners_;
};

}  // namespace selkov
