#pragma once

// Backward Euler-Maruyama stepping for the lattice Selkov system:
//   G(psi_{m+1}) = D(psi_m, dW_m),
// where G is the implicit operator and D the explicitly known right-hand side.

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "selkov/banded.hpp"
#include "selkov/lattice.hpp"
#include "selkov/model.hpp"
#include "selkov/noise.hpp"

namespace selkov {

struct SchemeConfig {
  double dt = 0.1;
  int n_sites = 16;  // truncation N, the lattice has 2N+1 sites
  Boundary boundary = Boundary::Periodic;
  double newton_tol = 1e-10;  // residual tolerance in ||.||_X
  int newton_max_iters = 50;
  int fallback_max_iters = 500;
  std::optional<double> trust_radius;  // default 10 ||psi||_X + 1
  std::optional<double> dt_ceiling;    // Delta^*, never quantified analytically
};

struct RightHandSide {
  Field D1;
  Field D2;
};

enum class SolverKind : std::uint8_t { Newton, FixedPoint };

struct StepDiagnostics {
  int iterations = 0;
  double final_residual = 0.0;
  SolverKind solver_used = SolverKind::Newton;
  // <psi - guess, G(psi) - G(guess)>_X between the solution and its initial guess.
  std::optional<double> monotonicity_witness;
};

/// D1 = u_m + f dt + [h + sigma(u_m)] dW,  D2 = v_m + g dt + [h + sigma(v_m)] dW.
/// Forcing and noise sequences are masked to the truncation of psi_m.
RightHandSide assemble_rhs(const ModelParams& params, const State& psi_m, double dW, double dt);

/// G(u, v) = (u + dt(d1 A u + a1 u - b1 F + b2 G(u)), v + dt(d2 A v + a2 v + b1 F - b2 G(u))).
State implicit_operator(const ModelParams& params, const SchemeConfig& cfg, const State& psi);

/// Analytic Jacobian of implicit_operator in interleaved (u_i, v_i) ordering:
/// unknown 2(i+N) is u_i and 2(i+N)+1 is v_i. Tridiagonal diffusion bands plus
/// 2x2 site-local reaction blocks; periodic lattices add wrap-around corners.
BandedMatrix jacobian(const ModelParams& params, const SchemeConfig& cfg, const State& psi);

Eigen::VectorXd pack(const State& psi);
State unpack(const Eigen::VectorXd& z, int truncation, Boundary boundary);

struct SolveResult {
  State state;
  StepDiagnostics diagnostics;
};

/// Solves G(psi) = D: trust-region-clipped Newton with backtracking, falling
/// back to the damped fixed point psi <- psi - omega (G psi - D) when Newton
/// stagnates. Throws Error(SolverDiverged) if both strategies fail.
SolveResult solve_implicit(const ModelParams& params, const SchemeConfig& cfg,
                           const RightHandSide& D, const State& guess);

SolveResult bem_step(const ModelParams& params, const SchemeConfig& cfg, const State& psi_m,
                     double dW);

struct Trajectory {
  std::vector<State> states;       // psi_0 and every stride-th state after it
  std::vector<std::size_t> steps;  // step index of each stored state
  std::size_t stride = 1;
  double dt = 0.0;
  int max_iterations = 0;
  std::size_t fallback_steps = 0;
  double max_residual = 0.0;
};

/// Called with (m, psi_m) for m = 0..n_steps.
using StepObserver = std::function<void(std::size_t, const State&)>;

/// Runs n_steps of the scheme without storing states; returns the final state.
/// Step failures are rethrown as StepFailed carrying the failing step index.
State run_trajectory(const ModelParams& params, const SchemeConfig& cfg, const State& psi0,
                     std::size_t n_steps, const NoiseStream& stream, const StepObserver& observer,
                     Trajectory* stats = nullptr);

Trajectory simulate_trajectory(const ModelParams& params, const SchemeConfig& cfg,
                               const State& psi0, std::size_t n_steps, const NoiseStream& stream,
                               std::size_t stride = 1);

struct CoupledRun {
  Trajectory small;
  Trajectory large;
  // b2 ||u^{N2} - u^{N1}||^2 + b1 ||v^{N2} - v^{N1}||^2, small run zero-extended.
  std::vector<double> gap_series;
};

/// Two truncations driven by the identical Wiener increments.
CoupledRun simulate_coupled_pair(const ModelParams& params, const SchemeConfig& cfg_small,
                                 const SchemeConfig& cfg_large, const State& psi0,
                                 std::size_t n_steps, const NoiseStream& stream,
                                 std::size_t stride = 1);

}  // namespace selkov
