#include "selkov/scheme.hpp"

#include <cmath>
#include <limits>

namespace selkov {

namespace {

void require_finite(const State& s, const char* where) {
  if (!s.is_finite()) throw Error(ErrorKind::NonFiniteState, std::string(where) + ": NaN/Inf in state");
}

// ||z||_X for an interleaved (u, v) vector.
double xnorm(const WeightedGeometry& g, const Eigen::VectorXd& z) {
  const Eigen::Index sites = z.size() / 2;
  const auto m = z.reshaped(2, sites);
  return std::sqrt(g.b2 * m.row(0).squaredNorm() + g.b1 * m.row(1).squaredNorm());
}

double xdot(const WeightedGeometry& g, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::Index sites = a.size() / 2;
  const auto ma = a.reshaped(2, sites);
  const auto mb = b.reshaped(2, sites);
  return g.b2 * ma.row(0).dot(mb.row(0)) + g.b1 * ma.row(1).dot(mb.row(1));
}

// Column of the neighbor of `site` in species `species`, or -1 past a ZeroPad edge.
Eigen::Index neighbor_column(int site, int n, Boundary b, int species) {
  const int period = 2 * n + 1;
  int k = site + n;
  if (k < 0 || k >= period) {
    if (b == Boundary::ZeroPad) return -1;
    k = ((k % period) + period) % period;
  }
  return 2 * static_cast<Eigen::Index>(k) + species;
}

class Residual {
 public:
  Residual(const ModelParams& params, const SchemeConfig& cfg, const RightHandSide& D)
      : params_(params), cfg_(cfg), d_(pack(State{D.D1, D.D2})), n_(D.D1.truncation()),
        boundary_(D.D1.boundary()) {}

  // G(z) - D; nullopt when the polynomial terms overflow.
  std::optional<Eigen::VectorXd> operator()(const Eigen::VectorXd& z) const {
    if (!z.allFinite()) return std::nullopt;
    try {
      return pack(implicit_operator(params_, cfg_, unpack(z, n_, boundary_))) - d_;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NonFiniteState) return std::nullopt;
      throw;
    }
  }

  const Eigen::VectorXd& rhs() const noexcept { return d_; }
  int truncation() const noexcept { return n_; }
  Boundary boundary() const noexcept { return boundary_; }

 private:
  const ModelParams& params_;
  const SchemeConfig& cfg_;
  Eigen::VectorXd d_;
  int n_;
  Boundary boundary_;
};

}  // namespace

Eigen::VectorXd pack(const State& psi) {
  const Eigen::Index sites = psi.u.size();
  Eigen::VectorXd z(2 * sites);
  auto m = z.reshaped(2, sites);
  m.row(0) = psi.u.values().transpose();
  m.row(1) = psi.v.values().transpose();
  return z;
}

State unpack(const Eigen::VectorXd& z, int truncation, Boundary boundary) {
  const Eigen::Index sites = 2 * truncation + 1;
  if (z.size() != 2 * sites) throw Error(ErrorKind::MismatchedShapes, "unpack: size mismatch");
  const auto m = z.reshaped(2, sites);
  return {Field(m.row(0).transpose(), boundary), Field(m.row(1).transpose(), boundary)};
}

RightHandSide assemble_rhs(const ModelParams& params, const State& psi_m, double dW, double dt) {
  require_finite(psi_m, "assemble_rhs");
  const NoiseCoefficient sigma = params.noise();
  const int n = psi_m.truncation();
  RightHandSide D{Field(n, psi_m.boundary()), Field(n, psi_m.boundary())};
  for (int i = -n; i <= n; ++i) {
    const double h = params.h.extended(i);
    const double u = psi_m.u[i];
    const double v = psi_m.v[i];
    D.D1.at(i) = u + params.f.extended(i) * dt + (h + sigma(i, u)) * dW;
    D.D2.at(i) = v + params.g.extended(i) * dt + (h + sigma(i, v)) * dW;
  }
  if (!D.D1.is_finite() || !D.D2.is_finite()) {
    throw Error(ErrorKind::NonFiniteState, "assemble_rhs: non-finite right-hand side");
  }
  return D;
}

State implicit_operator(const ModelParams& params, const SchemeConfig& cfg, const State& psi) {
  require_finite(psi, "implicit_operator");
  const double dt = cfg.dt;
  const Field Au = apply_laplacian(psi.u);
  const Field Av = apply_laplacian(psi.v);
  const Field F = eval_F(psi.u, psi.v, params.p);
  const Field Gu = eval_G(psi.u, params.p);
  const auto reaction = (-params.b1 * F.values() + params.b2 * Gu.values()).eval();

  State out = State::zeros(psi.truncation(), psi.boundary());
  out.u.values() = psi.u.values() + dt * (params.d1 * Au.values() + params.a1 * psi.u.values() + reaction);
  out.v.values() = psi.v.values() + dt * (params.d2 * Av.values() + params.a2 * psi.v.values() - reaction);
  require_finite(out, "implicit_operator");
  return out;
}

BandedMatrix jacobian(const ModelParams& params, const SchemeConfig& cfg, const State& psi) {
  const int n = psi.truncation();
  const Boundary b = psi.boundary();
  const double dt = cfg.dt;
  const int p = params.p;
  BandedMatrix J(2 * (2 * n + 1), 2, 2);

  for (int i = -n; i <= n; ++i) {
    const Eigen::Index ru = 2 * static_cast<Eigen::Index>(i + n);
    const Eigen::Index rv = ru + 1;
    const double u = psi.u[i];
    const double v = psi.v[i];

    // R(u, v) = -b1 u^{2p} v + b2 u^{2p+1}
    const double u2p = int_power(u, 2 * p);
    const double dR_du = -params.b1 * 2.0 * p * int_power(u, 2 * p - 1) * v + params.b2 * (2 * p + 1) * u2p;
    const double dR_dv = -params.b1 * u2p;

    J.add(ru, ru, 1.0 + dt * (2.0 * params.d1 + params.a1) + dt * dR_du);
    J.add(ru, rv, dt * dR_dv);
    J.add(rv, ru, -dt * dR_du);
    J.add(rv, rv, 1.0 + dt * (2.0 * params.d2 + params.a2) - dt * dR_dv);

    for (int step : {-1, 1}) {
      const Eigen::Index cu = neighbor_column(i + step, n, b, 0);
      if (cu < 0) continue;
      J.add(ru, cu, -dt * params.d1);
      J.add(rv, cu + 1, -dt * params.d2);
    }
  }
  return J;
}

SolveResult solve_implicit(const ModelParams& params, const SchemeConfig& cfg,
                           const RightHandSide& D, const State& guess) {
  if (!D.D1.same_shape(D.D2) || !D.D1.same_shape(guess.u)) {
    throw Error(ErrorKind::MismatchedShapes, "solve_implicit: rhs and guess are not aligned");
  }
  require_finite(guess, "solve_implicit");
  const WeightedGeometry geo = params.geometry();
  const Residual residual(params, cfg, D);

  Eigen::VectorXd z = pack(guess);
  const Eigen::VectorXd z0 = z;
  auto r_opt = residual(z);
  if (!r_opt) throw Error(ErrorKind::NonFiniteState, "solve_implicit: guess overflows G");
  Eigen::VectorXd r = std::move(*r_opt);
  const Eigen::VectorXd r0 = r;
  double rn = xnorm(geo, r);

  StepDiagnostics diag;
  auto finish = [&](SolverKind kind) {
    diag.solver_used = kind;
    diag.final_residual = rn;
    diag.monotonicity_witness = xdot(geo, z - z0, r - r0);
    return SolveResult{unpack(z, residual.truncation(), residual.boundary()), diag};
  };
  if (rn <= cfg.newton_tol) return finish(SolverKind::Newton);

  for (int it = 0; it < cfg.newton_max_iters; ++it) {
    Eigen::VectorXd dz;
    try {
      dz = jacobian(params, cfg, unpack(z, residual.truncation(), residual.boundary())).solve(-r);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SolverDiverged) throw;
      break;
    }
    if (!dz.allFinite()) break;
    const double radius = cfg.trust_radius.value_or(10.0 * xnorm(geo, z) + 1.0);
    const double dn = xnorm(geo, dz);
    if (dn > radius) dz *= radius / dn;

    bool accepted = false;
    double t = 1.0;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      Eigen::VectorXd zt = z + t * dz;
      auto rt = residual(zt);
      if (!rt) continue;
      const double rtn = xnorm(geo, *rt);
      if (rtn < (1.0 - 1e-4 * t) * rn) {
        z = std::move(zt);
        r = std::move(*rt);
        rn = rtn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    ++diag.iterations;
    if (rn <= cfg.newton_tol) return finish(SolverKind::Newton);
  }

  // Damped fixed point on the coercive operator; omega adapts to the observed contraction.
  double omega = 1.0;
  for (int it = 0; it < cfg.fallback_max_iters; ++it) {
    Eigen::VectorXd zt = z - omega * r;
    auto rt = residual(zt);
    const double rtn = rt ? xnorm(geo, *rt) : std::numeric_limits<double>::infinity();
    ++diag.iterations;
    if (rtn < rn) {
      z = std::move(zt);
      r = std::move(*rt);
      rn = rtn;
      omega = std::min(1.0, 1.25 * omega);
      if (rn <= cfg.newton_tol) return finish(SolverKind::FixedPoint);
    } else {
      omega *= 0.5;
      if (omega < 1e-12) break;
    }
  }
  throw Error(ErrorKind::SolverDiverged,
              "implicit solve stalled at residual " + std::to_string(rn) + " (tol " +
                  std::to_string(cfg.newton_tol) + "); the step size is too large for this state");
}

SolveResult bem_step(const ModelParams& params, const SchemeConfig& cfg, const State& psi_m,
                     double dW) {
  return solve_implicit(params, cfg, assemble_rhs(params, psi_m, dW, cfg.dt), psi_m);
}

State run_trajectory(const ModelParams& params, const SchemeConfig& cfg, const State& psi0,
                     std::size_t n_steps, const NoiseStream& stream, const StepObserver& observer,
                     Trajectory* stats) {
  State psi = psi0.resized(cfg.n_sites).with_boundary(cfg.boundary);
  const ModelParams local = params.restricted(cfg.n_sites, cfg.boundary);
  require_finite(psi, "run_trajectory");
  if (observer) observer(0, psi);
  for (std::size_t m = 0; m < n_steps; ++m) {
    try {
      SolveResult res = bem_step(local, cfg, psi, stream.increment(m));
      if (stats) {
        stats->max_iterations = std::max(stats->max_iterations, res.diagnostics.iterations);
        stats->max_residual = std::max(stats->max_residual, res.diagnostics.final_residual);
        if (res.diagnostics.solver_used == SolverKind::FixedPoint) ++stats->fallback_steps;
      }
      psi = std::move(res.state);
    } catch (const StepFailed&) {
      throw;
    } catch (const Error& e) {
      throw StepFailed(e.kind(), m, e.what());
    }
    if (observer) observer(m + 1, psi);
  }
  return psi;
}

Trajectory simulate_trajectory(const ModelParams& params, const SchemeConfig& cfg,
                               const State& psi0, std::size_t n_steps, const NoiseStream& stream,
                               std::size_t stride) {
  if (stride == 0) stride = 1;
  Trajectory traj;
  traj.stride = stride;
  traj.dt = cfg.dt;
  run_trajectory(
      params, cfg, psi0, n_steps, stream,
      [&](std::size_t m, const State& s) {
        if (m % stride == 0) {
          traj.states.push_back(s);
          traj.steps.push_back(m);
        }
      },
      &traj);
  return traj;
}

CoupledRun simulate_coupled_pair(const ModelParams& params, const SchemeConfig& cfg_small,
                                 const SchemeConfig& cfg_large, const State& psi0,
                                 std::size_t n_steps, const NoiseStream& stream,
                                 std::size_t stride) {
  const int n1 = cfg_small.n_sites;
  const int n2 = cfg_large.n_sites;
  if (n1 > n2) throw Error(ErrorKind::MismatchedShapes, "coupled pair requires N1 <= N2");
  if (psi0.u.support_radius() > n1 || psi0.v.support_radius() > n1) {
    throw Error(ErrorKind::MismatchedShapes, "coupled pair requires psi0 supported in |i| <= N1");
  }
  const State start_small = psi0.resized(n1).with_boundary(cfg_small.boundary);
  const State start_large = psi0.resized(n2).with_boundary(cfg_large.boundary);
  const WeightedGeometry geo = params.geometry();

  CoupledRun run;
  std::vector<State> small_path;
  small_path.reserve(n_steps + 1);
  if (stride == 0) stride = 1;
  run.small.stride = stride;
  run.small.dt = cfg_small.dt;
  run_trajectory(
      params, cfg_small, start_small, n_steps, stream,
      [&](std::size_t m, const State& s) {
        small_path.push_back(s);
        if (m % stride == 0) {
          run.small.states.push_back(s);
          run.small.steps.push_back(m);
        }
      },
      &run.small);
  run.large.stride = stride;
  run.large.dt = cfg_large.dt;
  run.gap_series.reserve(n_steps + 1);
  run_trajectory(
      params, cfg_large, start_large, n_steps, stream,
      [&](std::size_t m, const State& s) {
        const double d = weighted_distance(geo, small_path[m], s);
        run.gap_series.push_back(d * d);
        if (m % run.large.stride == 0) {
          run.large.states.push_back(s);
          run.large.steps.push_back(m);
        }
      },
      &run.large);
  return run;
}

}  // namespace selkov
