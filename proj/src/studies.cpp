#include "selkov/studies.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <limits>
#include <optional>

#include "selkov/parallel.hpp"

namespace selkov {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Replicate slot of the exceedance streams, disjoint from measure replicates.
constexpr std::uint64_t kExceedanceSlot = std::numeric_limits<std::uint64_t>::max() - 1;

// Integer k with value = k * unit, or ConfigRejected.
std::size_t integer_ratio(double value, double unit, const char* what) {
  const double r = value / unit;
  const double k = std::round(r);
  if (k < 1.0 || std::abs(r - k) > 1e-9 * k) {
    throw Error(ErrorKind::ConfigRejected, std::string(what) + " must be a positive integer multiple of the step");
  }
  return static_cast<std::size_t>(k);
}

void require_dt_grid(const ModelParams& params, const std::vector<double>& dt_grid) {
  if (dt_grid.empty()) throw Error(ErrorKind::EmptyStudy, "empty dt grid");
  for (std::size_t k = 0; k < dt_grid.size(); ++k) {
    if (k > 0 && dt_grid[k] > dt_grid[k - 1]) throw Error(ErrorKind::ConfigRejected, "dt grid must be decreasing");
    if (!(dt_grid[k] > 0.0 && dt_grid[k] < 1.0 / (4.0 * params.lambda())))
      throw Error(ErrorKind::ConfigRejected, "every dt must lie in (0, 1/(4 lambda))");
  }
}

void require_n_grid(const std::vector<int>& n_grid, int n_ref) {
  if (n_grid.empty()) throw Error(ErrorKind::EmptyStudy, "empty N grid");
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    if (n_grid[k] < 0) throw Error(ErrorKind::ConfigRejected, "N must be nonnegative");
    if (k > 0 && n_grid[k] <= n_grid[k - 1]) throw Error(ErrorKind::ConfigRejected, "N grid must be increasing");
  }
  if (n_ref < n_grid.back()) throw Error(ErrorKind::ConfigRejected, "reference N below the N grid");
}

SchemeConfig with(const SchemeConfig& base, double dt, int n) {
  SchemeConfig c = base;
  c.dt = dt;
  c.n_sites = n;
  return c;
}

StudyRow point_row(const std::string& study, double dt, int n, std::uint64_t seed, std::string stat, double value) {
  return StudyRow{study, dt, n, seed, std::move(stat), value, kNaN, kNaN};
}

StudyRow estimate_row(const std::string& study, double dt, int n, std::uint64_t seed, std::string stat,
                      const Estimate& e) {
  return StudyRow{study, dt, n, seed, std::move(stat), e.mean, e.low(), e.high()};
}

Estimate over_replicates(const std::vector<std::vector<double>>& by_rep, std::size_t k) {
  std::vector<double> v;
  v.reserve(by_rep.size());
  for (const auto& r : by_rep) v.push_back(r[k]);
  return mean_estimate(v);
}

std::string format_value(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

}  // namespace

Trend make_trend(std::string name, const std::vector<Estimate>& estimates) {
  Trend t;
  t.name = std::move(name);
  t.strictly_decreasing = true;
  t.non_increasing = true;
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    t.values.push_back(estimates[k].mean);
    t.half_widths.push_back(estimates[k].half_width);
    if (k == 0) continue;
    const double prev = estimates[k - 1].mean;
    const double cur = estimates[k].mean;
    if (!(cur < prev)) t.strictly_decreasing = false;
    const double slack = std::hypot(estimates[k - 1].half_width, estimates[k].half_width);
    if (cur > prev + slack) t.non_increasing = false;
  }
  return t;
}

const Trend* StudyReport::trend(const std::string& name) const {
  for (const Trend& t : trends)
    if (t.name == name) return &t;
  return nullptr;
}

std::vector<StudyRow> StudyReport::select(const std::string& statistic) const {
  std::vector<StudyRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
               [&](const StudyRow& r) { return r.statistic == statistic; });
  return out;
}

std::uint64_t replicate_seed(std::uint64_t root_seed, StudyId study, std::size_t replicate) {
  return derive_seed(root_seed, static_cast<std::uint64_t>(study), replicate,
                     std::numeric_limits<std::uint64_t>::max());
}

EmpiricalMeasure invariant_measure(const ModelParams& params, const SchemeConfig& cfg, const State& psi0,
                                   const MeasureProtocol& protocol, std::uint64_t root_seed, StudyId study,
                                   std::size_t replicate, double base_dt, int workers) {
  if (protocol.n_chains == 0 || protocol.samples_per_chain == 0)
    throw Error(ErrorKind::EmptyStudy, "measure protocol keeps no samples");
  const int substeps = static_cast<int>(integer_ratio(cfg.dt, base_dt, "dt"));
  const std::size_t stride = integer_ratio(protocol.sample_interval, cfg.dt, "sample_interval");
  const std::size_t kept = protocol.burn_in_samples + protocol.samples_per_chain;
  const std::size_t n_steps = stride * (kept - 1);

  std::vector<std::vector<State>> chains(protocol.n_chains);
  parallel_for(protocol.n_chains, workers, [&](std::size_t c) {
    const NoiseStream stream{derive_seed(root_seed, static_cast<std::uint64_t>(study), replicate, c), c, cfg.dt,
                             substeps};
    const Trajectory traj = simulate_trajectory(params, cfg, psi0, n_steps, stream, stride);
    chains[c] = krylov_bogolyubov_measure(traj, protocol.burn_in_samples, 1).samples();
  });
  std::vector<State> pooled;
  pooled.reserve(protocol.n_chains * protocol.samples_per_chain);
  for (auto& c : chains) std::move(c.begin(), c.end(), std::back_inserter(pooled));
  return EmpiricalMeasure(std::move(pooled));
}

StudyReport dt_refinement_study(const ModelParams& params, const SchemeConfig& base_cfg,
                                const std::vector<double>& dt_grid, const State& psi0,
                                const MeasureProtocol& protocol, const StudySeeds& seeds) {
  require_dt_grid(params, dt_grid);
  if (seeds.n_replicates == 0) throw Error(ErrorKind::EmptyStudy, "no replicates");
  const std::string name = "dt_study";
  const std::size_t K = dt_grid.size();
  const std::size_t R = seeds.n_replicates;
  const double base_dt = dt_grid.back();
  const int n = base_cfg.n_sites;
  const WeightedGeometry geo = params.geometry();

  std::vector<std::optional<EmpiricalMeasure>> measures(R * K);
  parallel_for(R * K, seeds.workers, [&](std::size_t t) {
    const std::size_t r = t / K, k = t % K;
    measures[t] = invariant_measure(params, with(base_cfg, dt_grid[k], n), psi0, protocol, seeds.root_seed,
                                    StudyId::DtStudy, r, base_dt);
  });

  const std::size_t P = K > 0 ? K - 1 : 0;
  std::vector<BLDistanceResult> dist(R * P);
  std::vector<MarginalKS> ks(R * P);
  parallel_for(R * P, seeds.workers, [&](std::size_t t) {
    const std::size_t r = t / P, k = t % P;
    const EmpiricalMeasure& a = *measures[r * K + k];
    const EmpiricalMeasure& b = *measures[r * K + k + 1];
    dist[t] = bl_distance(geo, a, b, protocol.distance);
    ks[t] = marginal_ks(a, b);
  });

  StudyReport rep;
  rep.study = name;
  std::vector<std::vector<double>> second(R, std::vector<double>(K)), mean_norm(R, std::vector<double>(K));
  for (std::size_t r = 0; r < R; ++r) {
    const std::uint64_t seed = replicate_seed(seeds.root_seed, StudyId::DtStudy, r);
    for (std::size_t k = 0; k < K; ++k) {
      const MeasureSummary s = summarize(geo, *measures[r * K + k]);
      second[r][k] = s.second_moment;
      mean_norm[r][k] = s.mean_norm;
      rep.rows.push_back(point_row(name, dt_grid[k], n, seed, "second_moment", s.second_moment));
      rep.rows.push_back(point_row(name, dt_grid[k], n, seed, "mean_norm", s.mean_norm));
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    rep.rows.push_back(estimate_row(name, dt_grid[k], n, seeds.root_seed, "second_moment_mean", over_replicates(second, k)));
    rep.rows.push_back(estimate_row(name, dt_grid[k], n, seeds.root_seed, "mean_norm_mean", over_replicates(mean_norm, k)));
  }

  // Pair k compares dt_grid[k] with dt_grid[k + 1]; rows carry the coarser dt.
  std::vector<std::vector<double>> d(R, std::vector<double>(P)), dm(R, std::vector<double>(P)),
      dn(R, std::vector<double>(P)), kmax(R, std::vector<double>(P));
  for (std::size_t r = 0; r < R; ++r) {
    const std::uint64_t seed = replicate_seed(seeds.root_seed, StudyId::DtStudy, r);
    for (std::size_t k = 0; k < P; ++k) {
      const BLDistanceResult& x = dist[r * P + k];
      d[r][k] = x.value;
      dm[r][k] = std::abs(second[r][k] - second[r][k + 1]);
      dn[r][k] = std::abs(mean_norm[r][k] - mean_norm[r][k + 1]);
      kmax[r][k] = ks[r * P + k].max_statistic;
      rep.rows.push_back(point_row(name, dt_grid[k], n, seed, "bl_distance", x.value));
      rep.rows.push_back(point_row(name, dt_grid[k], n, seed, "bl_gap", x.gap));
      rep.rows.push_back(point_row(name, dt_grid[k], n, seed, "second_moment_delta", dm[r][k]));
      rep.rows.push_back(point_row(name, dt_grid[k], n, seed, "mean_norm_delta", dn[r][k]));
      rep.rows.push_back(point_row(name, dt_grid[k], n, seed, "ks_max", kmax[r][k]));
      rep.rows.push_back(point_row(name, dt_grid[k], n, seed, "ks_mean", ks[r * P + k].mean_statistic));
    }
  }
  std::vector<Estimate> trend;
  for (std::size_t k = 0; k < P; ++k) {
    const Estimate e = over_replicates(d, k);
    trend.push_back(e);
    rep.rows.push_back(estimate_row(name, dt_grid[k], n, seeds.root_seed, "bl_distance_mean", e));
    rep.rows.push_back(estimate_row(name, dt_grid[k], n, seeds.root_seed, "second_moment_delta_mean", over_replicates(dm, k)));
    rep.rows.push_back(estimate_row(name, dt_grid[k], n, seeds.root_seed, "mean_norm_delta_mean", over_replicates(dn, k)));
    rep.rows.push_back(estimate_row(name, dt_grid[k], n, seeds.root_seed, "ks_max_mean", over_replicates(kmax, k)));
  }
  rep.trends.push_back(make_trend("bl_distance", trend));
  return rep;
}

StudyReport n_refinement_study(const ModelParams& params, const SchemeConfig& cfg,
                               const std::vector<int>& n_grid, int n_ref, const State& psi0,
                               const MeasureProtocol& protocol, const ExceedanceProtocol& exceedance,
                               const StudySeeds& seeds) {
  require_n_grid(n_grid, n_ref);
  if (seeds.n_replicates == 0) throw Error(ErrorKind::EmptyStudy, "no replicates");
  if (!(exceedance.eta > 0.0)) throw Error(ErrorKind::ConfigRejected, "exceedance threshold must be positive");
  if (!(cfg.dt > 0.0 && cfg.dt < 1.0 / (4.0 * params.lambda())))
    throw Error(ErrorKind::ConfigRejected, "dt must lie in (0, 1/(4 lambda))");
  const std::string name = "n_study";
  const std::size_t K = n_grid.size();
  const std::size_t R = seeds.n_replicates;
  const WeightedGeometry geo = params.geometry();
  StudyReport rep;
  rep.study = name;

  // (a) Coupled pathwise gaps, one Wiener path per stream shared by both sizes.
  const std::size_t S = exceedance.n_streams;
  std::vector<double> gaps(K * S);
  parallel_for(K * S, seeds.workers, [&](std::size_t t) {
    const std::size_t k = t / S, s = t % S;
    const NoiseStream stream{derive_seed(seeds.root_seed, static_cast<std::uint64_t>(StudyId::NStudy), kExceedanceSlot, s), s,
                             cfg.dt, 1};
    const CoupledRun run = simulate_coupled_pair(params, with(cfg, cfg.dt, n_grid[k]), with(cfg, cfg.dt, n_ref),
                                                 psi0, exceedance.step, stream, exceedance.step);
    gaps[t] = run.gap_series[exceedance.step];
  });
  std::vector<Estimate> freq;
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> hit(S), gap(S);
    for (std::size_t s = 0; s < S; ++s) {
      gap[s] = gaps[k * S + s];
      hit[s] = gap[s] >= exceedance.eta ? 1.0 : 0.0;
    }
    const Estimate e = mean_estimate(hit);
    freq.push_back(e);
    rep.rows.push_back(estimate_row(name, cfg.dt, n_grid[k], seeds.root_seed, "exceedance", e));
    rep.rows.push_back(estimate_row(name, cfg.dt, n_grid[k], seeds.root_seed, "gap_mean", mean_estimate(gap)));
  }
  rep.trends.push_back(make_trend("exceedance", freq));

  // (b) Invariant measures at each N against the reference truncation.
  std::vector<std::optional<EmpiricalMeasure>> ref(R), mu(R * K);
  parallel_for(R * (K + 1), seeds.workers, [&](std::size_t t) {
    const std::size_t r = t / (K + 1), k = t % (K + 1);
    const int n = k == K ? n_ref : n_grid[k];
    EmpiricalMeasure m = invariant_measure(params, with(cfg, cfg.dt, n), psi0, protocol, seeds.root_seed,
                                           StudyId::NStudy, r, cfg.dt);
    if (k == K) ref[r] = std::move(m);
    else mu[r * K + k] = m.resized(n_ref);
  });
  std::vector<BLDistanceResult> dist(R * K);
  parallel_for(R * K, seeds.workers, [&](std::size_t t) {
    dist[t] = bl_distance(geo, *mu[t], *ref[t / K], protocol.distance);
  });
  std::vector<std::vector<double>> d(R, std::vector<double>(K));
  for (std::size_t r = 0; r < R; ++r) {
    const std::uint64_t seed = replicate_seed(seeds.root_seed, StudyId::NStudy, r);
    for (std::size_t k = 0; k < K; ++k) {
      d[r][k] = dist[r * K + k].value;
      rep.rows.push_back(point_row(name, cfg.dt, n_grid[k], seed, "bl_distance", d[r][k]));
      rep.rows.push_back(point_row(name, cfg.dt, n_grid[k], seed, "bl_gap", dist[r * K + k].gap));
    }
  }
  std::vector<Estimate> trend;
  for (std::size_t k = 0; k < K; ++k) {
    trend.push_back(over_replicates(d, k));
    rep.rows.push_back(estimate_row(name, cfg.dt, n_grid[k], seeds.root_seed, "bl_distance_mean", trend.back()));
  }
  rep.trends.push_back(make_trend("bl_distance", trend));
  return rep;
}

StudyReport double_limit_study(const ModelParams& params, const SchemeConfig& cfg,
                               const std::vector<double>& dt_grid, const std::vector<int>& n_grid,
                               const State& psi0, const MeasureProtocol& protocol, const StudySeeds& seeds) {
  require_dt_grid(params, dt_grid);
  require_n_grid(n_grid, n_grid.empty() ? 0 : n_grid.back());
  if (seeds.n_replicates == 0) throw Error(ErrorKind::EmptyStudy, "no replicates");
  const std::string name = "double_limit";
  const std::size_t KD = dt_grid.size(), KN = n_grid.size(), R = seeds.n_replicates;
  const std::size_t cells = KD * KN;
  const double base_dt = dt_grid.back();
  const int n_max = n_grid.back();
  const WeightedGeometry geo = params.geometry();

  std::vector<std::optional<EmpiricalMeasure>> mu(R * cells);
  parallel_for(R * cells, seeds.workers, [&](std::size_t t) {
    const std::size_t r = t / cells, c = t % cells;
    const std::size_t i = c / KN, j = c % KN;
    mu[t] = invariant_measure(params, with(cfg, dt_grid[i], n_grid[j]), psi0, protocol, seeds.root_seed,
                              StudyId::DoubleLimit, r, base_dt)
                .resized(n_max);
  });
  std::vector<double> dist(R * cells, 0.0);
  parallel_for(R * cells, seeds.workers, [&](std::size_t t) {
    const std::size_t r = t / cells, c = t % cells;
    if (c == cells - 1) return;  // the reference cell itself
    dist[t] = bl_distance(geo, *mu[t], *mu[r * cells + cells - 1], protocol.distance).value;
  });

  StudyReport rep;
  rep.study = name;
  std::vector<std::vector<double>> d(R, std::vector<double>(cells));
  for (std::size_t r = 0; r < R; ++r) {
    const std::uint64_t seed = replicate_seed(seeds.root_seed, StudyId::DoubleLimit, r);
    for (std::size_t c = 0; c < cells; ++c) {
      d[r][c] = dist[r * cells + c];
      rep.rows.push_back(point_row(name, dt_grid[c / KN], n_grid[c % KN], seed, "bl_distance", d[r][c]));
    }
  }
  std::vector<Estimate> cell(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    cell[c] = over_replicates(d, c);
    rep.rows.push_back(estimate_row(name, dt_grid[c / KN], n_grid[c % KN], seeds.root_seed, "bl_distance_mean", cell[c]));
  }
  for (std::size_t i = 0; i < KD; ++i) {
    std::vector<Estimate> row(cell.begin() + static_cast<std::ptrdiff_t>(i * KN),
                              cell.begin() + static_cast<std::ptrdiff_t>((i + 1) * KN));
    rep.trends.push_back(make_trend("dt=" + format_value(dt_grid[i]) + " over n", row));
  }
  for (std::size_t j = 0; j < KN; ++j) {
    std::vector<Estimate> col;
    for (std::size_t i = 0; i < KD; ++i) col.push_back(cell[i * KN + j]);
    rep.trends.push_back(make_trend("n=" + std::to_string(n_grid[j]) + " over dt", col));
  }
  return rep;
}

}  // namespace selkov
