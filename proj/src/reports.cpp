#include "selkov/reports.hpp"

#include <algorithm>
#include <cmath>

#include "selkov/parallel.hpp"

namespace selkov {

NoiseStream trajectory_stream(const MonteCarlo& mc, StudyId study, std::uint64_t k, double dt) {
  return NoiseStream{derive_seed(mc.root_seed, static_cast<std::uint64_t>(study), mc.replicate, k), k, dt, 1};
}

std::vector<Violation> bound_conditions(const ModelParams& params, double dt) {
  std::vector<Violation> out;
  const double lambda = params.lambda();
  const double beta = params.noise().growth_slope();
  if (!(lambda > 16.0 * beta * beta)) {
    out.push_back({"lambda > 16 beta^2", lambda, 16.0 * beta * beta,
                   "drift dissipation must dominate the noise growth"});
  }
  if (!(dt > 0.0 && dt < 1.0 / (4.0 * lambda))) {
    out.push_back({"dt < 1/(4 lambda)", dt, 1.0 / (4.0 * lambda), "step too large for the moment bound"});
  }
  return out;
}

double moment_bound(const ModelParams& params, double dt, double psi0_norm_sq, std::size_t m) {
  const double rate = std::log1p(-params.lambda() * dt / 4.0);
  return psi0_norm_sq * std::exp(static_cast<double>(m) * rate) + params.moment_constant();
}

bool MomentReport::any_violation() const {
  return std::any_of(violated.begin(), violated.end(), [](bool v) { return v; });
}

namespace {

void require_bound_conditions(const ModelParams& params, double dt, const char* who) {
  const std::vector<Violation> v = bound_conditions(params, dt);
  if (v.empty()) return;
  std::string msg = std::string(who) + ":";
  for (const Violation& x : v) msg += " " + x.name + " fails (" + std::to_string(x.actual) + " vs " +
                                       std::to_string(x.required) + ");";
  throw Error(ErrorKind::ConfigRejected, msg);
}

}  // namespace

MomentReport check_moment_bound(const ModelParams& params, const SchemeConfig& cfg, const State& psi0,
                                const MonteCarlo& mc) {
  require_bound_conditions(params, cfg.dt, "check_moment_bound");
  if (mc.n_trajectories == 0) throw Error(ErrorKind::ConfigRejected, "check_moment_bound: no trajectories");
  const WeightedGeometry geo = params.geometry();
  const State start = psi0.resized(cfg.n_sites).with_boundary(cfg.boundary);
  const Eigen::Index steps = static_cast<Eigen::Index>(mc.horizon) + 1;

  // One row of squared norms per trajectory; reduced in index order.
  std::vector<Eigen::VectorXd> rows(mc.n_trajectories);
  parallel_for(mc.n_trajectories, mc.workers, [&](std::size_t k) {
    Eigen::VectorXd row(steps);
    run_trajectory(params, cfg, start, mc.horizon, trajectory_stream(mc, StudyId::Moments, k, cfg.dt),
                   [&](std::size_t m, const State& s) { row(static_cast<Eigen::Index>(m)) = weighted_norm_sq(geo, s); });
    rows[k] = std::move(row);
  });

  MomentReport rep;
  rep.n_trajectories = mc.n_trajectories;
  rep.M = params.moment_constant();
  rep.log_decay = std::log1p(-params.lambda() * cfg.dt / 4.0);
  rep.psi0_norm_sq = weighted_norm_sq(geo, start);
  std::vector<double> column(mc.n_trajectories);
  for (Eigen::Index m = 0; m < steps; ++m) {
    for (std::size_t k = 0; k < mc.n_trajectories; ++k) column[k] = rows[k](m);
    const Estimate e = mean_estimate(column);
    const double b = moment_bound(params, cfg.dt, rep.psi0_norm_sq, static_cast<std::size_t>(m));
    rep.m_grid.push_back(static_cast<std::size_t>(m));
    rep.estimated.push_back(e);
    rep.bound.push_back(b);
    rep.violated.push_back(e.mean - e.half_width > b);
  }
  return rep;
}

int TailReport::empirical_threshold(std::size_t m, double eta) const {
  const auto it = std::find(m_grid.begin(), m_grid.end(), m);
  if (it == m_grid.end()) return -1;
  const auto& row = tail_mass[static_cast<std::size_t>(it - m_grid.begin())];
  for (std::size_t k = 0; k < I_grid.size(); ++k) {
    if (row[k].mean < eta) return I_grid[k];
  }
  return -1;
}

TailReport check_tail_bound(const ModelParams& params, const SchemeConfig& cfg, const State& psi0,
                            const MonteCarlo& mc, std::vector<int> I_grid) {
  if (I_grid.empty()) throw Error(ErrorKind::ConfigRejected, "check_tail_bound: empty cutoff grid");
  std::sort(I_grid.begin(), I_grid.end());
  I_grid.erase(std::unique(I_grid.begin(), I_grid.end()), I_grid.end());
  if (I_grid.front() < 0 || I_grid.back() >= cfg.n_sites) {
    throw Error(ErrorKind::ConfigRejected, "check_tail_bound: cutoffs must lie in [0, N)");
  }
  if (mc.n_trajectories == 0) throw Error(ErrorKind::ConfigRejected, "check_tail_bound: no trajectories");
  const WeightedGeometry geo = params.geometry();
  const State start = psi0.resized(cfg.n_sites).with_boundary(cfg.boundary);
  const int n = cfg.n_sites;
  const Eigen::Index cols = static_cast<Eigen::Index>(I_grid.size());
  const std::size_t steps = mc.horizon + 1;

  struct RunTails {
    std::vector<Eigen::VectorXd> per_step;
    std::size_t monotone_failures = 0;
  };
  std::vector<RunTails> runs(mc.n_trajectories);
  parallel_for(mc.n_trajectories, mc.workers, [&](std::size_t k) {
    RunTails out;
    out.per_step.reserve(steps);
    Eigen::VectorXd shell(n + 1);
    run_trajectory(params, cfg, start, mc.horizon, trajectory_stream(mc, StudyId::Tails, k, cfg.dt),
                   [&](std::size_t, const State& s) {
                     for (int r = 0; r <= n; ++r) {
                       double e = geo.b2 * s.u[r] * s.u[r] + geo.b1 * s.v[r] * s.v[r];
                       if (r > 0) e += geo.b2 * s.u[-r] * s.u[-r] + geo.b1 * s.v[-r] * s.v[-r];
                       shell(r) = e;
                     }
                     // Accumulate from the outside in, so each tail is the next
                     // one plus a nonnegative shell.
                     Eigen::VectorXd tails(cols);
                     double acc = 0.0;
                     int r = n;
                     for (Eigen::Index c = cols - 1; c >= 0; --c) {
                       for (; r > I_grid[static_cast<std::size_t>(c)]; --r) acc += shell(r);
                       tails(c) = acc;
                     }
                     for (Eigen::Index c = 1; c < cols; ++c) {
                       if (tails(c) > tails(c - 1)) ++out.monotone_failures;
                     }
                     out.per_step.push_back(std::move(tails));
                   });
    runs[k] = std::move(out);
  });

  TailReport rep;
  rep.I_grid = I_grid;
  rep.n_trajectories = mc.n_trajectories;
  std::vector<double> column(mc.n_trajectories);
  for (std::size_t m = 0; m < steps; ++m) {
    rep.m_grid.push_back(m);
    std::vector<Estimate> row;
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (std::size_t k = 0; k < mc.n_trajectories; ++k) column[k] = runs[k].per_step[m](c);
      row.push_back(mean_estimate(column));
    }
    rep.tail_mass.push_back(std::move(row));
  }
  for (const RunTails& r : runs) rep.monotone_failures += r.monotone_failures;
  return rep;
}

}  // namespace selkov
