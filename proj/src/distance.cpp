#include "selkov/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace selkov {

const char* to_string(BLMethod m) noexcept {
  return m == BLMethod::ExactLP ? "exact_lp" : "dictionary";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMassEps = 1e-15;

// Pooled samples as columns of weighted coordinates: sqrt(b2) u then sqrt(b1) v.
Eigen::MatrixXd pooled_coordinates(const WeightedGeometry& g, const EmpiricalMeasure& mu1,
                                   const EmpiricalMeasure& mu2) {
  const int n = std::max(mu1.truncation(), mu2.truncation());
  const Eigen::Index sites = 2 * n + 1;
  Eigen::MatrixXd X(2 * sites, static_cast<Eigen::Index>(mu1.size() + mu2.size()));
  const double su = std::sqrt(g.b2);
  const double sv = std::sqrt(g.b1);
  Eigen::Index col = 0;
  for (const EmpiricalMeasure* mu : {&mu1, &mu2}) {
    for (const State& s : mu->samples()) {
      for (int i = -n; i <= n; ++i) {
        X(i + n, col) = su * s.u.extended(i);
        X(sites + i + n, col) = sv * s.v.extended(i);
      }
      ++col;
    }
  }
  return X;
}

// sum_i mu1_i phi_i - sum_j mu2_j phi_j, summed per measure so that identical
// inputs cancel exactly.
double pairing(const Eigen::VectorXd& phi, Eigen::Index n1, const EmpiricalMeasure& mu1,
               const EmpiricalMeasure& mu2) {
  double a = 0.0;
  double b = 0.0;
  for (Eigen::Index k = 0; k < n1; ++k) a += mu1.weight(static_cast<std::size_t>(k)) * phi(k);
  for (std::size_t k = 0; k < mu2.size(); ++k) b += mu2.weight(k) * phi(n1 + static_cast<Eigen::Index>(k));
  return a - b;
}

// Exact floating-point check of the budget and sup-norm constraints.
bool feasible(const Eigen::VectorXd& phi, const Eigen::MatrixXd& D, double L) {
  const double cap = 1.0 - L;
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    if (std::abs(phi(i)) > cap) return false;
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(phi(i) - phi(j)) > L * D(i, j)) return false;
    }
  }
  return true;
}

void make_feasible(Eigen::VectorXd& phi, const Eigen::MatrixXd& D, double L) {
  for (int attempt = 0; attempt < 8 && !feasible(phi, D, L); ++attempt) {
    double s = 1.0;
    const double cap = 1.0 - L;
    for (Eigen::Index i = 0; i < phi.size(); ++i) {
      if (std::abs(phi(i)) > cap) s = std::min(s, cap / std::abs(phi(i)));
      for (Eigen::Index j = 0; j < i; ++j) {
        const double diff = std::abs(phi(i) - phi(j));
        if (diff > L * D(i, j)) s = std::min(s, L * D(i, j) / diff);
      }
    }
    phi *= s * (1.0 - 4.0 * std::numeric_limits<double>::epsilon());
  }
  if (!feasible(phi, D, L)) phi.setZero();
}

struct BudgetEvaluation {
  double L = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  Eigen::VectorXd phi;
};

class ExactLP {
 public:
  ExactLP(const Eigen::MatrixXd& D, const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2)
      : D_(D), mu1_(mu1), mu2_(mu2), n1_(static_cast<Eigen::Index>(mu1.size())),
        n2_(static_cast<Eigen::Index>(mu2.size())) {
    a_.resize(n1_);
    b_.resize(n2_);
    for (Eigen::Index i = 0; i < n1_; ++i) a_(i) = mu1.weight(static_cast<std::size_t>(i));
    for (Eigen::Index j = 0; j < n2_; ++j) b_(j) = mu2.weight(static_cast<std::size_t>(j));
  }

  BudgetEvaluation evaluate(double L) {
    ++evaluations;
    BudgetEvaluation e;
    e.L = L;
    const double cap = 2.0 * (1.0 - L);
    const Eigen::MatrixXd C = (L * D_.topRightCorner(n1_, n2_)).cwiseMin(cap);
    const TransportSolution t = solve_transport(C, a_, b_);
    e.upper = t.cost;
    // c-transform of the demand potential over every pooled point: 1-Lipschitz
    // for min(L d, cap), hence oscillation at most cap.
    const Eigen::Index n = n1_ + n2_;
    Eigen::VectorXd phi(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      double best = kInf;
      for (Eigen::Index j = 0; j < n2_; ++j) {
        best = std::min(best, t.demand_potential(j) + std::min(L * D_(k, n1_ + j), cap));
      }
      phi(k) = best;
    }
    phi.array() -= 0.5 * (phi.maxCoeff() + phi.minCoeff());
    e.lower = pairing(phi, n1_, mu1_, mu2_);
    e.phi = std::move(phi);
    return e;
  }

  int evaluations = 0;

 private:
  const Eigen::MatrixXd& D_;
  const EmpiricalMeasure& mu1_;
  const EmpiricalMeasure& mu2_;
  Eigen::Index n1_;
  Eigen::Index n2_;
  Eigen::VectorXd a_;
  Eigen::VectorXd b_;
};

BLDistanceResult exact_lp(const Eigen::MatrixXd& D, const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2,
                          const BLOptions& opt) {
  ExactLP lp(D, mu1, mu2);
  BudgetEvaluation best;
  best.phi = Eigen::VectorXd::Zero(D.rows());
  auto consider = [&](const BudgetEvaluation& e) {
    if (e.lower > best.lower) best = e;
  };
  // The fixed-budget optimum is a minimum over couplings of functions concave
  // in L, so it is concave and a golden-section search finds its maximum.
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.0;
  double hi = 1.0;
  double x1 = hi - r * (hi - lo);
  double x2 = lo + r * (hi - lo);
  BudgetEvaluation e1 = lp.evaluate(x1);
  BudgetEvaluation e2 = lp.evaluate(x2);
  consider(e1);
  consider(e2);
  while (hi - lo > opt.budget_tolerance) {
    if (e1.upper < e2.upper) {
      lo = x1;
      x1 = x2;
      e1 = std::move(e2);
      x2 = lo + r * (hi - lo);
      e2 = lp.evaluate(x2);
      consider(e2);
    } else {
      hi = x2;
      x2 = x1;
      e2 = std::move(e1);
      x1 = hi - r * (hi - lo);
      e1 = lp.evaluate(x1);
      consider(e1);
    }
  }

  BLDistanceResult out;
  out.method = BLMethod::ExactLP;
  out.evaluations = lp.evaluations;
  out.budget = best.L;
  out.upper_bound = best.upper;
  make_feasible(best.phi, D, best.L);
  out.value = std::max(0.0, pairing(best.phi, static_cast<Eigen::Index>(mu1.size()), mu1, mu2));
  out.gap = std::max(0.0, out.upper_bound - out.value);
  out.certificate.assign(best.phi.data(), best.phi.data() + best.phi.size());
  return out;
}

BLDistanceResult dictionary(const Eigen::MatrixXd& X, const Eigen::MatrixXd& D, const EmpiricalMeasure& mu1,
                            const EmpiricalMeasure& mu2, const BLOptions& opt) {
  const Eigen::Index n = D.rows();
  const Eigen::Index n1 = static_cast<Eigen::Index>(mu1.size());
  const Eigen::VectorXd centers = X.rowwise().mean();
  const int anchors = static_cast<int>(std::min<Eigen::Index>(opt.dictionary_anchors, n));

  BLDistanceResult out;
  out.method = BLMethod::Dictionary;
  out.upper_bound = std::numeric_limits<double>::quiet_NaN();
  out.gap = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd best = Eigen::VectorXd::Zero(n);
  double best_value = 0.0;
  double best_L = 0.0;
  auto consider = [&](Eigen::VectorXd phi, double L) {
    const double v = pairing(phi, n1, mu1, mu2);
    if (std::abs(v) > best_value) {
      best_value = std::abs(v);
      best = v < 0 ? Eigen::VectorXd(-phi) : phi;
      best_L = L;
    }
  };
  for (int k = 1; k <= opt.dictionary_budgets; ++k) {
    const double L = static_cast<double>(k) / (opt.dictionary_budgets + 1);
    const double cap = 1.0 - L;
    // Clipped coordinate projections; coordinates are already X-weighted.
    for (Eigen::Index c = 0; c < X.rows(); ++c) {
      consider(((X.row(c).transpose().array() - centers(c)) * L).cwiseMax(-cap).cwiseMin(cap).matrix(), L);
    }
    // Clipped radial profiles around anchor samples.
    for (int a = 0; a < anchors; ++a) {
      const Eigen::Index idx = (static_cast<Eigen::Index>(a) * n) / anchors;
      consider((cap - (L * D.col(idx).array()).cwiseMin(2.0 * cap)).matrix(), L);
    }
  }
  make_feasible(best, D, best_L);
  out.budget = best_L;
  out.value = std::max(0.0, pairing(best, n1, mu1, mu2));
  out.certificate.assign(best.data(), best.data() + best.size());
  return out;
}

}  // namespace

Eigen::MatrixXd pooled_distances(const WeightedGeometry& g, const EmpiricalMeasure& mu1,
                                 const EmpiricalMeasure& mu2) {
  const Eigen::MatrixXd X = pooled_coordinates(g, mu1, mu2);
  const Eigen::Index n = X.cols();
  Eigen::MatrixXd D(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    D(j, j) = 0.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      D(i, j) = (X.col(i) - X.col(j)).norm();
      D(j, i) = D(i, j);
    }
  }
  return D;
}

BLDistanceResult bl_distance(const WeightedGeometry& g, const EmpiricalMeasure& mu1,
                             const EmpiricalMeasure& mu2, const BLOptions& options) {
  if (mu1.size() == 0 || mu2.size() == 0) throw Error(ErrorKind::EmptyMeasure, "bl_distance: empty measure");
  const Eigen::MatrixXd D = pooled_distances(g, mu1, mu2);
  if (options.method == BLMethod::Dictionary) {
    return dictionary(pooled_coordinates(g, mu1, mu2), D, mu1, mu2, options);
  }
  return exact_lp(D, mu1, mu2, options);
}

double verify_certificate(const WeightedGeometry& g, const EmpiricalMeasure& mu1,
                          const EmpiricalMeasure& mu2, const BLDistanceResult& r) {
  const Eigen::MatrixXd D = pooled_distances(g, mu1, mu2);
  if (static_cast<Eigen::Index>(r.certificate.size()) != D.rows()) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::VectorXd phi = Eigen::Map<const Eigen::VectorXd>(r.certificate.data(), D.rows());
  if (!(r.budget >= 0.0 && r.budget <= 1.0) || !feasible(phi, D, r.budget))
    return std::numeric_limits<double>::quiet_NaN();
  return pairing(phi, static_cast<Eigen::Index>(mu1.size()), mu1, mu2);
}

TransportSolution solve_transport(const Eigen::MatrixXd& cost, const Eigen::VectorXd& supply,
                                  const Eigen::VectorXd& demand) {
  const Eigen::Index n1 = cost.rows();
  const Eigen::Index n2 = cost.cols();
  if (supply.size() != n1 || demand.size() != n2)
    throw Error(ErrorKind::MismatchedShapes, "solve_transport: marginal sizes differ from the cost matrix");

  TransportSolution sol;
  sol.plan = Eigen::MatrixXd::Zero(n1, n2);
  Eigen::VectorXd ra = supply;
  Eigen::VectorXd rb = demand;
  // Reduced cost of arc i -> j is c_ij + pr_i - pc_j >= 0; arcs with flow are tight.
  Eigen::VectorXd pr = Eigen::VectorXd::Zero(n1);
  Eigen::VectorXd pc = cost.colwise().minCoeff().transpose();
  std::vector<std::vector<Eigen::Index>> support(static_cast<std::size_t>(n2));  // rows with flow into column j

  // Row reduction, then a greedy push along the tight arcs.
  for (Eigen::Index i = 0; i < n1; ++i) pr(i) = -(cost.row(i).transpose() - pc).minCoeff();
  for (Eigen::Index i = 0; i < n1; ++i) {
    for (Eigen::Index j = 0; j < n2 && ra(i) > kMassEps; ++j) {
      if (rb(j) <= kMassEps || cost(i, j) + pr(i) - pc(j) != 0.0) continue;
      const double amount = std::min(ra(i), rb(j));
      sol.plan(i, j) = amount;
      support[static_cast<std::size_t>(j)].push_back(i);
      ra(i) -= amount;
      rb(j) -= amount;
    }
  }

  std::vector<double> dr(static_cast<std::size_t>(n1)), dc(static_cast<std::size_t>(n2));
  std::vector<Eigen::Index> pred_r(static_cast<std::size_t>(n1)), pred_c(static_cast<std::size_t>(n2));
  std::vector<char> done_r(static_cast<std::size_t>(n1)), done_c(static_cast<std::size_t>(n2));

  auto has_supply = [&] {
    for (Eigen::Index i = 0; i < n1; ++i)
      if (ra(i) > kMassEps) return true;
    return false;
  };

  while (has_supply()) {
    std::fill(dr.begin(), dr.end(), kInf);
    std::fill(dc.begin(), dc.end(), kInf);
    std::fill(pred_r.begin(), pred_r.end(), -1);
    std::fill(pred_c.begin(), pred_c.end(), -1);
    std::fill(done_r.begin(), done_r.end(), 0);
    std::fill(done_c.begin(), done_c.end(), 0);
    for (Eigen::Index i = 0; i < n1; ++i)
      if (ra(i) > kMassEps) dr[static_cast<std::size_t>(i)] = 0.0;

    Eigen::Index target = -1;
    double reach = kInf;
    for (;;) {
      // Dense Dijkstra: linear scan for the nearest open node.
      double best = kInf;
      Eigen::Index node = -1;
      bool is_row = true;
      for (Eigen::Index i = 0; i < n1; ++i) {
        if (!done_r[static_cast<std::size_t>(i)] && dr[static_cast<std::size_t>(i)] < best) {
          best = dr[static_cast<std::size_t>(i)];
          node = i;
          is_row = true;
        }
      }
      for (Eigen::Index j = 0; j < n2; ++j) {
        if (!done_c[static_cast<std::size_t>(j)] && dc[static_cast<std::size_t>(j)] < best) {
          best = dc[static_cast<std::size_t>(j)];
          node = j;
          is_row = false;
        }
      }
      if (node < 0) break;
      if (is_row) {
        done_r[static_cast<std::size_t>(node)] = 1;
        for (Eigen::Index j = 0; j < n2; ++j) {
          if (done_c[static_cast<std::size_t>(j)]) continue;
          const double nd = best + std::max(0.0, cost(node, j) + pr(node) - pc(j));
          if (nd < dc[static_cast<std::size_t>(j)]) {
            dc[static_cast<std::size_t>(j)] = nd;
            pred_c[static_cast<std::size_t>(j)] = node;
          }
        }
      } else {
        done_c[static_cast<std::size_t>(node)] = 1;
        if (rb(node) > kMassEps) {
          target = node;
          reach = best;
          break;
        }
        for (Eigen::Index i : support[static_cast<std::size_t>(node)]) {
          if (done_r[static_cast<std::size_t>(i)]) continue;
          const double nd = best + std::max(0.0, -cost(i, node) + pc(node) - pr(i));
          if (nd < dr[static_cast<std::size_t>(i)]) {
            dr[static_cast<std::size_t>(i)] = nd;
            pred_r[static_cast<std::size_t>(i)] = node;
          }
        }
      }
    }
    if (target < 0) break;  // leftover supply is rounding residue

    for (Eigen::Index i = 0; i < n1; ++i) pr(i) += std::min(dr[static_cast<std::size_t>(i)], reach);
    for (Eigen::Index j = 0; j < n2; ++j) pc(j) += std::min(dc[static_cast<std::size_t>(j)], reach);

    // Bottleneck along the alternating path target <- row <- col <- ... <- source row.
    double amount = rb(target);
    Eigen::Index j = target;
    Eigen::Index i = pred_c[static_cast<std::size_t>(j)];
    for (;;) {
      const Eigen::Index back = pred_r[static_cast<std::size_t>(i)];
      if (back < 0) {
        amount = std::min(amount, ra(i));
        break;
      }
      amount = std::min(amount, sol.plan(i, back));
      j = back;
      i = pred_c[static_cast<std::size_t>(j)];
    }

    rb(target) -= amount;
    j = target;
    i = pred_c[static_cast<std::size_t>(j)];
    for (;;) {
      auto& into = support[static_cast<std::size_t>(j)];
      if (sol.plan(i, j) == 0.0 && amount > 0.0) into.push_back(i);
      sol.plan(i, j) += amount;
      const Eigen::Index back = pred_r[static_cast<std::size_t>(i)];
      if (back < 0) {
        ra(i) -= amount;
        break;
      }
      sol.plan(i, back) -= amount;
      if (sol.plan(i, back) <= 0.0) {
        sol.plan(i, back) = 0.0;
        auto& from = support[static_cast<std::size_t>(back)];
        from.erase(std::remove(from.begin(), from.end(), i), from.end());
      }
      j = back;
      i = pred_c[static_cast<std::size_t>(j)];
    }
  }

  sol.cost = (sol.plan.array() * cost.array()).sum();
  sol.demand_potential = -pc;
  return sol;
}

}  // namespace selkov
