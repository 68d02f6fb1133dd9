#include "selkov/banded.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "selkov/errors.hpp"

namespace selkov {

namespace {

// LU factors of the band part, LAPACK gbtrf layout: row r stores columns
// r - kl .. r + ku + kl (the extra kl upper diagonals hold pivoting fill).
class BandLU {
 public:
  BandLU(const Eigen::MatrixXd& band, Eigen::Index n, int kl, int ku)
      : n_(n), kl_(kl), width_(ku + kl), lu_(Eigen::MatrixXd::Zero(n, 2 * kl + ku + 1)), piv_(n) {
    for (Eigen::Index r = 0; r < n; ++r) {
      for (int off = -kl; off <= ku; ++off) {
        const Eigen::Index c = r + off;
        if (c >= 0 && c < n) at(r, c) = band(r, off + kl);
      }
    }
    factor();
  }

  Eigen::VectorXd solve(Eigen::VectorXd b) const {
    for (Eigen::Index j = 0; j < n_; ++j) {
      const Eigen::Index p = piv_[j];
      if (p != j) std::swap(b(j), b(p));
      const Eigen::Index last = std::min<Eigen::Index>(n_ - 1, j + kl_);
      for (Eigen::Index i = j + 1; i <= last; ++i) b(i) -= get(i, j) * b(j);
    }
    for (Eigen::Index j = n_ - 1; j >= 0; --j) {
      double s = b(j);
      const Eigen::Index last = std::min<Eigen::Index>(n_ - 1, j + width_);
      for (Eigen::Index c = j + 1; c <= last; ++c) s -= get(j, c) * b(c);
      b(j) = s / get(j, j);
    }
    return b;
  }

 private:
  double& at(Eigen::Index r, Eigen::Index c) { return lu_(r, c - r + kl_); }
  double get(Eigen::Index r, Eigen::Index c) const { return lu_(r, c - r + kl_); }

  void factor() {
    double scale = 0.0;
    for (Eigen::Index r = 0; r < lu_.rows(); ++r) scale = std::max(scale, lu_.row(r).cwiseAbs().maxCoeff());
    const double tiny = std::numeric_limits<double>::epsilon() * std::max(scale, 1e-300);

    for (Eigen::Index j = 0; j < n_; ++j) {
      const Eigen::Index last_row = std::min<Eigen::Index>(n_ - 1, j + kl_);
      const Eigen::Index last_col = std::min<Eigen::Index>(n_ - 1, j + width_);
      Eigen::Index p = j;
      double best = std::abs(get(j, j));
      for (Eigen::Index i = j + 1; i <= last_row; ++i) {
        if (std::abs(get(i, j)) > best) {
          best = std::abs(get(i, j));
          p = i;
        }
      }
      piv_[j] = p;
      if (!(best > tiny)) {
        throw Error(ErrorKind::SolverDiverged,
                    "singular banded Jacobian at column " + std::to_string(j));
      }
      if (p != j) {
        for (Eigen::Index c = j; c <= last_col; ++c) std::swap(at(j, c), at(p, c));
      }
      const double pivot = get(j, j);
      for (Eigen::Index i = j + 1; i <= last_row; ++i) {
        const double m = get(i, j) / pivot;
        at(i, j) = m;
        if (m == 0.0) continue;
        for (Eigen::Index c = j + 1; c <= last_col; ++c) at(i, c) -= m * get(j, c);
      }
    }
  }

  Eigen::Index n_;
  int kl_;
  int width_;
  Eigen::MatrixXd lu_;
  std::vector<Eigen::Index> piv_;
};

}  // namespace

BandedMatrix::BandedMatrix(Eigen::Index n, int lower, int upper)
    : n_(n), kl_(lower), ku_(upper), band_(Eigen::MatrixXd::Zero(n, lower + upper + 1)) {}

void BandedMatrix::add(Eigen::Index r, Eigen::Index c, double value) {
  if (in_band(r, c)) {
    band_(r, c - r + kl_) += value;
    return;
  }
  for (auto& e : corners_) {
    if (e.row == r && e.col == c) {
      e.value += value;
      return;
    }
  }
  corners_.push_back({r, c, value});
}

double BandedMatrix::coeff(Eigen::Index r, Eigen::Index c) const {
  if (in_band(r, c)) return band_(r, c - r + kl_);
  double s = 0.0;
  for (const auto& e : corners_) {
    if (e.row == r && e.col == c) s += e.value;
  }
  return s;
}

Eigen::VectorXd BandedMatrix::apply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
  for (Eigen::Index r = 0; r < n_; ++r) {
    double s = 0.0;
    for (int off = -kl_; off <= ku_; ++off) {
      const Eigen::Index c = r + off;
      if (c >= 0 && c < n_) s += band_(r, off + kl_) * x(c);
    }
    y(r) = s;
  }
  for (const auto& e : corners_) y(e.row) += e.value * x(e.col);
  return y;
}

Eigen::MatrixXd BandedMatrix::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n_, n_);
  for (Eigen::Index r = 0; r < n_; ++r) {
    for (int off = -kl_; off <= ku_; ++off) {
      const Eigen::Index c = r + off;
      if (c >= 0 && c < n_) d(r, c) = band_(r, off + kl_);
    }
  }
  for (const auto& e : corners_) d(e.row, e.col) += e.value;
  return d;
}

Eigen::VectorXd BandedMatrix::solve(const Eigen::VectorXd& b) const {
  if (b.size() != n_) throw Error(ErrorKind::MismatchedShapes, "banded solve: rhs size mismatch");
  const BandLU lu(band_, n_, kl_, ku_);
  Eigen::VectorXd y = lu.solve(b);
  if (corners_.empty()) return y;

  // A = Band + U V^T with U(:, t) = value_t e_{row_t} and V(:, t) = e_{col_t}.
  const auto k = static_cast<Eigen::Index>(corners_.size());
  Eigen::MatrixXd z(n_, k);
  for (Eigen::Index t = 0; t < k; ++t) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n_);
    u(corners_[t].row) = corners_[t].value;
    z.col(t) = lu.solve(u);
  }
  Eigen::MatrixXd cap = Eigen::MatrixXd::Identity(k, k);
  Eigen::VectorXd vty(k);
  for (Eigen::Index t = 0; t < k; ++t) {
    cap.row(t) += z.row(corners_[t].col);
    vty(t) = y(corners_[t].col);
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> cap_lu(cap);
  if (!cap_lu.isInvertible()) {
    throw Error(ErrorKind::SolverDiverged, "singular Woodbury capacitance matrix");
  }
  return y - z * cap_lu.solve(vty);
}

}  // namespace selkov
