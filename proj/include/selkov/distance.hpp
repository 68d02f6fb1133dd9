#pragma once

#include <Eigen/Core>

#include <vector>

#include "selkov/measure.hpp"
#include "selkov/model.hpp"

namespace selkov {

enum class BLMethod : std::uint8_t { ExactLP, Dictionary };

const char* to_string(BLMethod m) noexcept;

struct BLOptions {
  BLMethod method = BLMethod::ExactLP;
  double budget_tolerance = 1e-7;  // golden-section width on the Lipschitz budget L
  int dictionary_anchors = 16;
  int dictionary_budgets = 19;
};

/// Lower bound on sup { (phi, mu1) - (phi, mu2) : ||phi||_inf + Lip(phi) <= 1 }.
///
/// The certificate holds the test-function values at the pooled samples (mu1's
/// samples first, then mu2's). It satisfies |phi_i - phi_j| <= L d_X(x_i, x_j)
/// and |phi_i| <= 1 - L in floating point, so value is a rigorous lower bound.
struct BLDistanceResult {
  double value = 0.0;
  std::vector<double> certificate;
  BLMethod method = BLMethod::ExactLP;
  double budget = 0.0;       // Lipschitz part L of the best test function
  double upper_bound = 0.0;  // best coupling cost at the best L found (ExactLP)
  double gap = 0.0;          // upper_bound - value at that L
  int evaluations = 0;       // transport solves
};

BLDistanceResult bl_distance(const WeightedGeometry& g, const EmpiricalMeasure& mu1,
                             const EmpiricalMeasure& mu2, const BLOptions& options = {});

/// Pairwise ||x_i - x_j||_X over the pooled samples of mu1 then mu2, after
/// zero-extension to the larger truncation.
Eigen::MatrixXd pooled_distances(const WeightedGeometry& g, const EmpiricalMeasure& mu1,
                                 const EmpiricalMeasure& mu2);

/// Re-checks a certificate against the budget and sup-norm constraints and
/// returns its value sum_i w_i phi_i, or NaN if any constraint fails.
double verify_certificate(const WeightedGeometry& g, const EmpiricalMeasure& mu1,
                          const EmpiricalMeasure& mu2, const BLDistanceResult& r);

struct TransportSolution {
  double cost = 0.0;
  Eigen::MatrixXd plan;          // rows: supply points, cols: demand points
  Eigen::VectorXd demand_potential;  // h with f_i - h_j <= c_ij, tight on the plan
};

/// Exact balanced transport between supply a and demand b (both summing to 1)
/// for cost c >= 0, by successive shortest paths with reduced costs.
TransportSolution solve_transport(const Eigen::MatrixXd& cost, const Eigen::VectorXd& supply,
                                  const Eigen::VectorXd& demand);

}  // namespace selkov
