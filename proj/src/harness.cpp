#include "selkov/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <map>

#include "selkov/io.hpp"
#include "selkov/parallel.hpp"

namespace selkov {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool wants(const ExperimentConfig& cfg, const char* format) {
  return std::find(cfg.formats.begin(), cfg.formats.end(), format) != cfg.formats.end();
}

std::string short_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

std::string params_hash(const ExperimentConfig& cfg) { return sha256_hex(dump_json(to_json(cfg)["model"])); }

StudyRow estimate_row(const std::string& study, const ExperimentConfig& cfg, std::string stat, const Estimate& e) {
  return {study, cfg.scheme.dt, cfg.scheme.n_sites, cfg.root_seed, std::move(stat), e.mean, e.low(), e.high()};
}

StudyRow point_row(const std::string& study, const ExperimentConfig& cfg, std::string stat, double value) {
  return {study, cfg.scheme.dt, cfg.scheme.n_sites, cfg.root_seed, std::move(stat), value, kNaN, kNaN};
}

nlohmann::json trends_json(const std::vector<Trend>& trends) {
  nlohmann::json out = nlohmann::json::array();
  for (const Trend& t : trends) {
    out.push_back({{"name", t.name},
                   {"values", t.values},
                   {"half_widths", t.half_widths},
                   {"strictly_decreasing", t.strictly_decreasing},
                   {"non_increasing", t.non_increasing}});
  }
  return out;
}

nlohmann::json rows_json(const std::vector<StudyRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  auto num = [](double x) { return std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x); };
  for (const StudyRow& r : rows) {
    out.push_back({{"study", r.study}, {"dt", r.dt}, {"n", r.n}, {"seed", r.seed}, {"statistic", r.statistic},
                   {"value", num(r.value)}, {"ci_low", num(r.ci_low)}, {"ci_high", num(r.ci_high)}});
  }
  return out;
}

struct Outcome {
  std::vector<StudyRow> rows;
  std::vector<Trend> trends;
  nlohmann::json summary = nlohmann::json::object();
  bool checks_passed = true;
};

void write_results(const ExperimentConfig& cfg, const fs::path& dir, const Outcome& o) {
  if (wants(cfg, "csv")) write_long_csv(dir / "results.csv", o.rows);
  if (wants(cfg, "json")) {
    write_text(dir / "results.json",
               dump_json({{"rows", rows_json(o.rows)}, {"trends", trends_json(o.trends)}, {"summary", o.summary}}));
  }
}

void run_simulate(const ExperimentConfig& cfg, const fs::path& dir) {
  const ModelParams params = cfg.params();
  const State psi0 = cfg.initial_state().resized(cfg.scheme.n_sites).with_boundary(cfg.scheme.boundary);
  const MonteCarlo mc = cfg.monte_carlo_run();
  const NoiseStream stream = trajectory_stream(mc, StudyId::Simulate, 0, cfg.scheme.dt);
  const Trajectory traj = simulate_trajectory(params, cfg.scheme, psi0, cfg.monte_carlo.horizon, stream,
                                              std::max<std::size_t>(1, cfg.monte_carlo.thinning));
  std::vector<CsvRow> rows;
  const int n = cfg.scheme.n_sites;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    if (traj.steps[k] < cfg.monte_carlo.burn_in) continue;
    for (int i = -n; i <= n; ++i) {
      rows.push_back({std::to_string(traj.steps[k]), std::to_string(i), format_double(traj.states[k].u[i]),
                      format_double(traj.states[k].v[i])});
    }
  }
  const std::string comment = "dt=" + format_double(cfg.scheme.dt) + " n=" + std::to_string(n) +
                              " seed=" + std::to_string(stream.seed) + " params_hash=" + params_hash(cfg);
  write_csv(dir / "trajectory.csv", {"step", "site", "u", "v"}, rows, {comment});
}

Outcome run_moments(const ExperimentConfig& cfg, const fs::path& dir) {
  const ModelParams params = cfg.params();
  const State psi0 = cfg.initial_state().resized(cfg.scheme.n_sites).with_boundary(cfg.scheme.boundary);
  const MomentReport rep = check_moment_bound(params, cfg.scheme, psi0, cfg.monte_carlo_run());
  Outcome o;
  for (std::size_t k = 0; k < rep.m_grid.size(); ++k) {
    const std::string m = std::to_string(rep.m_grid[k]);
    o.rows.push_back(estimate_row("moments", cfg, "norm_sq:m=" + m, rep.estimated[k]));
    o.rows.push_back(point_row("moments", cfg, "bound:m=" + m, rep.bound[k]));
  }
  o.rows.push_back(point_row("moments", cfg, "M", rep.M));
  o.rows.push_back(point_row("moments", cfg, "log_decay", rep.log_decay));
  const auto violations = static_cast<double>(std::count(rep.violated.begin(), rep.violated.end(), true));
  o.rows.push_back(point_row("moments", cfg, "violations", violations));
  o.summary = {{"M", rep.M}, {"violations", violations}, {"n_trajectories", rep.n_trajectories}};
  if (wants(cfg, "csv")) emit_plot_data(rep, dir);
  return o;
}

Outcome run_tails(const ExperimentConfig& cfg, const fs::path& dir) {
  const ModelParams params = cfg.params();
  const State psi0 = cfg.initial_state().resized(cfg.scheme.n_sites).with_boundary(cfg.scheme.boundary);
  const TailReport rep = check_tail_bound(params, cfg.scheme, psi0, cfg.monte_carlo_run(), cfg.tail_cutoffs);
  Outcome o;
  for (std::size_t j = 0; j < rep.m_grid.size(); ++j) {
    for (std::size_t k = 0; k < rep.I_grid.size(); ++k) {
      o.rows.push_back(estimate_row("tails", cfg,
                                    "tail:m=" + std::to_string(rep.m_grid[j]) + ":I=" + std::to_string(rep.I_grid[k]),
                                    rep.tail_mass[j][k]));
    }
  }
  o.rows.push_back(point_row("tails", cfg, "monotone_failures", static_cast<double>(rep.monotone_failures)));
  const std::size_t last = rep.m_grid.empty() ? 0 : rep.m_grid.back();
  nlohmann::json thresholds = nlohmann::json::object();
  for (double eta : {1e-2, 1e-3, 1e-4, 1e-6}) {
    const int I = rep.empirical_threshold(last, eta);
    o.rows.push_back(point_row("tails", cfg, "threshold:m=" + std::to_string(last) + ":eta=" + short_double(eta),
                               I < 0 ? kNaN : static_cast<double>(I)));
    thresholds[short_double(eta)] = I;
  }
  o.summary = {{"monotone_failures", rep.monotone_failures}, {"empirical_thresholds", thresholds}};
  if (wants(cfg, "csv")) emit_plot_data(rep, dir);
  return o;
}

Outcome run_invariant(const ExperimentConfig& cfg) {
  const ModelParams params = cfg.params().restricted(cfg.scheme.n_sites, cfg.scheme.boundary);
  const State psi0 = cfg.initial_state().resized(cfg.scheme.n_sites).with_boundary(cfg.scheme.boundary);
  const WeightedGeometry g = params.geometry();
  const std::size_t R = cfg.n_replicates;
  if (R == 0) throw Error(ErrorKind::EmptyStudy, "invariant: no replicates");
  std::vector<EmpiricalMeasure> mu;
  for (std::size_t r = 0; r < R; ++r) {
    mu.push_back(invariant_measure(params, cfg.scheme, psi0, cfg.measure, cfg.root_seed, StudyId::Invariant, r,
                                   cfg.scheme.dt, cfg.workers));
  }
  Outcome o;
  std::vector<double> second, mean;
  for (std::size_t r = 0; r < R; ++r) {
    const MeasureSummary s = summarize(g, mu[r]);
    second.push_back(s.second_moment);
    mean.push_back(s.mean_norm);
    const std::uint64_t seed = replicate_seed(cfg.root_seed, StudyId::Invariant, r);
    o.rows.push_back({"invariant", cfg.scheme.dt, cfg.scheme.n_sites, seed, "second_moment", s.second_moment, kNaN, kNaN});
    o.rows.push_back({"invariant", cfg.scheme.dt, cfg.scheme.n_sites, seed, "mean_norm", s.mean_norm, kNaN, kNaN});
  }
  o.rows.push_back(estimate_row("invariant", cfg, "second_moment_mean", mean_estimate(second)));
  o.rows.push_back(estimate_row("invariant", cfg, "mean_norm_mean", mean_estimate(mean)));
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < R; ++a)
    for (std::size_t b = a + 1; b < R; ++b) pairs.emplace_back(a, b);
  std::vector<BLDistanceResult> dist(pairs.size());
  parallel_for(pairs.size(), cfg.workers,
               [&](std::size_t k) { dist[k] = bl_distance(g, mu[pairs[k].first], mu[pairs[k].second], cfg.measure.distance); });
  std::vector<double> values;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const std::string tag = ":r1=" + std::to_string(pairs[k].first) + ":r2=" + std::to_string(pairs[k].second);
    o.rows.push_back(point_row("invariant", cfg, "bl_distance" + tag, dist[k].value));
    o.rows.push_back(point_row("invariant", cfg, "bl_gap" + tag, dist[k].gap));
    values.push_back(dist[k].value);
  }
  if (!values.empty()) o.rows.push_back(estimate_row("invariant", cfg, "bl_distance_between_replicates", mean_estimate(values)));
  o.summary = {{"replicates", R}, {"samples_per_measure", mu.front().size()}};
  return o;
}

Outcome from_study(const StudyReport& rep, const ExperimentConfig& cfg, const fs::path& dir) {
  Outcome o;
  o.rows = rep.rows;
  o.trends = rep.trends;
  if (wants(cfg, "csv")) emit_plot_data(rep, dir);
  return o;
}

Outcome run_ops(const ExperimentConfig& cfg, const fs::path& dir) {
  const std::vector<OpsCheckResult> results = run_ops_check(cfg.params(), cfg.scheme, cfg.root_seed);
  Outcome o;
  std::size_t failed = 0;
  for (const auto& r : results) failed += r.passed() ? 0 : 1;
  o.checks_passed = failed == 0;
  o.summary = {{"properties", results.size()}, {"failed", failed}};
  write_ops_check(results, dir / "ops_check.csv");
  return o;
}

std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

const char* version() noexcept { return SELKOV_VERSION; }

std::string config_hash(const ExperimentConfig& cfg) { return sha256_hex(dump_json(to_json(cfg))); }

RunManifest run(const ExperimentConfig& cfg) {
  std::vector<Violation> violations = check_conditions(cfg);
  if (!violations.empty()) throw ConditionViolated(std::move(violations));

  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = cfg.output_directory;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::IoError, "cannot create output directory " + dir.string());
  fs::remove(dir / kManifestName, ec);

  Outcome o;
  const std::string study = to_string(cfg.study);
  try {
    switch (cfg.study) {
      case Study::Simulate:
        run_simulate(cfg, dir);
        break;
      case Study::Moments:
        o = run_moments(cfg, dir);
        break;
      case Study::Tails:
        o = run_tails(cfg, dir);
        break;
      case Study::Invariant:
        o = run_invariant(cfg);
        break;
      case Study::DtStudy:
        o = from_study(dt_refinement_study(cfg.params(), cfg.scheme, cfg.dt_grid, cfg.initial_state(), cfg.measure,
                                           cfg.study_seeds()),
                       cfg, dir);
        break;
      case Study::NStudy:
        o = from_study(n_refinement_study(cfg.params(), cfg.scheme, cfg.n_grid, cfg.n_ref, cfg.initial_state(),
                                          cfg.measure, cfg.exceedance, cfg.study_seeds()),
                       cfg, dir);
        break;
      case Study::DoubleLimit:
        o = from_study(double_limit_study(cfg.params(), cfg.scheme, cfg.dt_grid, cfg.n_grid, cfg.initial_state(),
                                          cfg.measure, cfg.study_seeds()),
                       cfg, dir);
        break;
      case Study::ValidateOps:
        o = run_ops(cfg, dir);
        break;
    }
  } catch (const ConditionViolated&) {
    throw;
  } catch (const Error& e) {
    throw Error(e.kind(), study + ": " + e.what());
  }
  if (cfg.study != Study::Simulate) write_results(cfg, dir, o);

  RunManifest m;
  m.directory = dir;
  m.study = study;
  m.config_hash = config_hash(cfg);
  m.version = version();
  m.checks_passed = o.checks_passed;
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() != kManifestName) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  nlohmann::json listed = nlohmann::json::array();
  for (const fs::path& p : files) {
    FileRecord r{fs::relative(p, dir).generic_string(), sha256_file(p), fs::file_size(p)};
    listed.push_back({{"path", r.path}, {"sha256", r.sha256}, {"bytes", r.bytes}});
    m.files.push_back(std::move(r));
  }
  m.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  m.json = {{"study", study},
            {"version", m.version},
            {"config", to_json(cfg)},
            {"config_hash", m.config_hash},
            {"root_seed", cfg.root_seed},
            {"workers", cfg.workers},
            {"started_utc", utc_timestamp()},
            {"wall_clock_seconds", m.wall_clock_seconds},
            {"files", listed},
            {"trends", trends_json(o.trends)},
            {"summary", o.summary},
            {"checks_passed", o.checks_passed}};
  write_text(dir / kManifestName, dump_json(m.json));
  return m;
}

std::vector<fs::path> emit_plot_data(const MomentReport& rep, const fs::path& dir) {
  if (rep.m_grid.empty()) throw Error(ErrorKind::EmptyStudy, "moment report has no steps");
  std::vector<CsvRow> rows;
  for (std::size_t k = 0; k < rep.m_grid.size(); ++k) {
    const Estimate& e = rep.estimated[k];
    rows.push_back({std::to_string(rep.m_grid[k]), format_double(e.mean), format_double(e.low()),
                    format_double(e.high()), format_double(rep.bound[k])});
  }
  const fs::path p = dir / "moment_curve.csv";
  write_csv(p, {"m", "estimate", "ci_low", "ci_high", "bound"}, rows);
  return {p};
}

std::vector<fs::path> emit_plot_data(const TailReport& rep, const fs::path& dir) {
  if (rep.m_grid.empty() || rep.I_grid.empty()) throw Error(ErrorKind::EmptyStudy, "tail report is empty");
  std::vector<CsvRow> rows;
  for (std::size_t j = 0; j < rep.m_grid.size(); ++j) {
    for (std::size_t k = 0; k < rep.I_grid.size(); ++k) {
      const Estimate& e = rep.tail_mass[j][k];
      rows.push_back({std::to_string(rep.m_grid[j]), std::to_string(rep.I_grid[k]), format_double(e.mean),
                      format_double(e.low()), format_double(e.high())});
    }
  }
  const fs::path p = dir / "tail_mass.csv";
  write_csv(p, {"m", "I", "estimate", "ci_low", "ci_high"}, rows);
  return {p};
}

std::vector<fs::path> emit_plot_data(const StudyReport& rep, const fs::path& dir) {
  if (rep.rows.empty()) throw Error(ErrorKind::EmptyStudy, "study '" + rep.study + "' has no rows");
  auto table = [](const std::vector<StudyRow>& rows, bool by_dt, bool by_n) {
    std::vector<CsvRow> out;
    for (const StudyRow& r : rows) {
      CsvRow row;
      if (by_dt) row.push_back(format_double(r.dt));
      if (by_n) row.push_back(std::to_string(r.n));
      row.insert(row.end(), {format_double(r.value), format_double(r.ci_low), format_double(r.ci_high)});
      out.push_back(std::move(row));
    }
    return out;
  };
  std::vector<fs::path> written;
  auto emit = [&](const char* name, const CsvRow& header, const std::vector<CsvRow>& rows) {
    if (rows.empty()) return;
    written.push_back(dir / name);
    write_csv(written.back(), header, rows);
  };
  const std::vector<StudyRow> dist = rep.select("bl_distance_mean");
  if (rep.study == "dt_study") {
    emit("distance_vs_dt.csv", {"dt", "distance", "ci_low", "ci_high"}, table(dist, true, false));
  } else if (rep.study == "n_study") {
    emit("distance_vs_n.csv", {"n", "distance", "ci_low", "ci_high"}, table(dist, false, true));
    emit("exceedance_vs_n.csv", {"n", "exceedance", "ci_low", "ci_high"}, table(rep.select("exceedance"), false, true));
  } else if (rep.study == "double_limit") {
    emit("distance_matrix.csv", {"dt", "n", "distance", "ci_low", "ci_high"}, table(dist, true, true));
  }
  if (written.empty()) throw Error(ErrorKind::EmptyStudy, "study '" + rep.study + "' has nothing to plot");
  return written;
}

void write_ops_check(const std::vector<OpsCheckResult>& results, const fs::path& path) {
  std::vector<CsvRow> rows;
  for (const auto& r : results) {
    rows.push_back({r.suite, r.property, r.boundary, std::to_string(r.trials), std::to_string(r.failures),
                    format_double(r.worst), format_double(r.tolerance), r.passed() ? "pass" : "fail"});
  }
  write_csv(path, {"suite", "property", "boundary", "trials", "failures", "worst", "tolerance", "result"}, rows);
}

}  // namespace selkov
