#include "selkov/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <set>

namespace selkov {

namespace {

struct StudyName {
  Study study;
  const char* name;
};

constexpr StudyName kStudies[] = {
    {Study::Simulate, "simulate"}, {Study::Moments, "moments"},     {Study::Tails, "tails"},
    {Study::Invariant, "invariant"}, {Study::DtStudy, "dt-study"},  {Study::NStudy, "n-study"},
    {Study::DoubleLimit, "double-limit"}, {Study::ValidateOps, "ops-check"},
};

[[noreturn]] void parse_error(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::ParseError, path + ": " + what);
}

void require_keys(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) parse_error(path, "expected a mapping");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!ok.count(key)) parse_error(path.empty() ? key : path + "." + key, "unknown key");
  }
}

std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

template <typename T>
void read(const YAML::Node& node, const std::string& path, const char* key, T& out) {
  const YAML::Node v = node[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    parse_error(join(path, key), "wrong type");
  }
}

template <typename T>
void read(const YAML::Node& node, const std::string& path, const char* key, std::optional<T>& out) {
  const YAML::Node v = node[key];
  if (!v) return;
  T tmp{};
  read(node, path, key, tmp);
  out = tmp;
}

ProfileSpec read_profile(const YAML::Node& node, const std::string& path) {
  ProfileSpec p;
  if (!node) return p;
  require_keys(node, path, {"profile", "amplitude", "radius", "exponent", "width", "values", "extent"});
  read(node, path, "profile", p.kind);
  read(node, path, "amplitude", p.amplitude);
  read(node, path, "radius", p.radius);
  read(node, path, "exponent", p.exponent);
  read(node, path, "width", p.width);
  read(node, path, "values", p.values);
  read(node, path, "extent", p.extent);
  static const std::set<std::string> kinds{"zero", "constant", "box", "power", "gaussian", "explicit"};
  if (!kinds.count(p.kind)) parse_error(join(path, "profile"), "unknown profile '" + p.kind + "'");
  if (p.kind == "explicit" && p.values.size() % 2 != 1) parse_error(join(path, "values"), "needs odd length");
  if (p.radius < 0 || (p.extent && *p.extent < 0)) parse_error(path, "radius and extent must be nonnegative");
  return p;
}

nlohmann::json profile_json(const ProfileSpec& p) {
  nlohmann::json j{{"profile", p.kind}};
  if (p.kind == "constant" || p.kind == "box" || p.kind == "power" || p.kind == "gaussian") j["amplitude"] = p.amplitude;
  if (p.kind == "box") j["radius"] = p.radius;
  if (p.kind == "power") j["exponent"] = p.exponent;
  if (p.kind == "gaussian") j["width"] = p.width;
  if (p.kind == "explicit") j["values"] = p.values;
  if (p.extent) j["extent"] = *p.extent;
  return j;
}

bool needs_moment_condition(Study s) {
  return s == Study::Moments || s == Study::Invariant || s == Study::DtStudy || s == Study::NStudy ||
         s == Study::DoubleLimit;
}

}  // namespace

const char* to_string(Study s) noexcept {
  for (const auto& x : kStudies)
    if (x.study == s) return x.name;
  return "simulate";
}

Study study_from_string(const std::string& name) {
  for (const auto& x : kStudies)
    if (name == x.name) return x.study;
  throw Error(ErrorKind::ParseError, "study: unknown study '" + name + "'");
}

Field ProfileSpec::build(int default_extent) const {
  const int e = extent.value_or(default_extent);
  if (kind == "zero") return Field(0, Boundary::ZeroPad);
  if (kind == "constant") return Field::constant(e, Boundary::ZeroPad, amplitude);
  if (kind == "box") return Field::constant(radius, Boundary::ZeroPad, amplitude);
  if (kind == "explicit") {
    return Field(Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())),
                 Boundary::ZeroPad);
  }
  Field out(e, Boundary::ZeroPad);
  for (int i = -e; i <= e; ++i) {
    const double r = std::abs(i);
    out.at(i) = kind == "power" ? amplitude * std::pow(1.0 + r, -exponent)
                                : amplitude * std::exp(-r * r / (2.0 * width * width));
  }
  return out;
}

int ExperimentConfig::max_truncation() const {
  int n = scheme.n_sites;
  for (int k : n_grid) n = std::max(n, k);
  return std::max(n, n_ref);
}

ModelParams ExperimentConfig::params() const {
  const int e = max_truncation();
  ModelParams m;
  m.d1 = model.d1;
  m.d2 = model.d2;
  m.a1 = model.a1;
  m.a2 = model.a2;
  m.b1 = model.b1;
  m.b2 = model.b2;
  m.p = model.p;
  m.f = model.f.build(e);
  m.g = model.g.build(e);
  m.h = model.h.build(e);
  m.delta = model.delta.build(e);
  m.beta = model.beta;
  m.sigma_family = model.family;
  m.L_sigma = model.lipschitz.value_or(m.noise().lipschitz());
  return m;
}

State ExperimentConfig::initial_state() const {
  const int e = max_truncation();
  Field u = initial_u.build(e), v = initial_v.build(e);
  const int n = std::max(u.truncation(), v.truncation());
  return {u.resized(n).with_boundary(scheme.boundary), v.resized(n).with_boundary(scheme.boundary)};
}

MonteCarlo ExperimentConfig::monte_carlo_run() const {
  MonteCarlo mc;
  mc.n_trajectories = monte_carlo.n_trajectories;
  mc.horizon = monte_carlo.horizon;
  mc.root_seed = root_seed;
  mc.workers = workers;
  return mc;
}

StudySeeds ExperimentConfig::study_seeds() const { return StudySeeds{root_seed, n_replicates, workers}; }

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorKind::ParseError, std::string("config is not valid YAML: ") + e.what());
  }
  if (!root || root.IsNull()) throw Error(ErrorKind::ParseError, "config is empty");
  require_keys(root, "", {"study", "model", "scheme", "initial", "monte_carlo", "seeds", "output", "workers",
                          "grids", "exceedance", "measure"});
  ExperimentConfig c;
  std::string study = to_string(c.study);
  read(root, "", "study", study);
  c.study = study_from_string(study);
  read(root, "", "workers", c.workers);

  if (const YAML::Node m = root["model"]) {
    require_keys(m, "model", {"d1", "d2", "a1", "a2", "b1", "b2", "p", "f", "g", "h", "noise"});
    read(m, "model", "d1", c.model.d1);
    read(m, "model", "d2", c.model.d2);
    read(m, "model", "a1", c.model.a1);
    read(m, "model", "a2", c.model.a2);
    read(m, "model", "b1", c.model.b1);
    read(m, "model", "b2", c.model.b2);
    read(m, "model", "p", c.model.p);
    c.model.f = read_profile(m["f"], "model.f");
    c.model.g = read_profile(m["g"], "model.g");
    c.model.h = read_profile(m["h"], "model.h");
    if (const YAML::Node nz = m["noise"]) {
      require_keys(nz, "model.noise", {"family", "beta", "delta", "lipschitz"});
      std::string family = to_string(c.model.family);
      read(nz, "model.noise", "family", family);
      try {
        c.model.family = sigma_family_from_string(family);
      } catch (const Error&) {
        parse_error("model.noise.family", "unknown family '" + family + "'");
      }
      read(nz, "model.noise", "beta", c.model.beta);
      read(nz, "model.noise", "lipschitz", c.model.lipschitz);
      c.model.delta = read_profile(nz["delta"], "model.noise.delta");
    }
  }

  if (const YAML::Node s = root["scheme"]) {
    require_keys(s, "scheme", {"dt", "n_sites", "boundary", "newton_tol", "newton_max_iters", "fallback_max_iters",
                               "trust_radius", "dt_ceiling"});
    read(s, "scheme", "dt", c.scheme.dt);
    read(s, "scheme", "n_sites", c.scheme.n_sites);
    std::string boundary = to_string(c.scheme.boundary);
    read(s, "scheme", "boundary", boundary);
    if (boundary == "periodic") c.scheme.boundary = Boundary::Periodic;
    else if (boundary == "zero_pad") c.scheme.boundary = Boundary::ZeroPad;
    else parse_error("scheme.boundary", "expected periodic or zero_pad");
    read(s, "scheme", "newton_tol", c.scheme.newton_tol);
    read(s, "scheme", "newton_max_iters", c.scheme.newton_max_iters);
    read(s, "scheme", "fallback_max_iters", c.scheme.fallback_max_iters);
    read(s, "scheme", "trust_radius", c.scheme.trust_radius);
    read(s, "scheme", "dt_ceiling", c.scheme.dt_ceiling);
  }

  if (const YAML::Node i = root["initial"]) {
    require_keys(i, "initial", {"u", "v"});
    c.initial_u = read_profile(i["u"], "initial.u");
    c.initial_v = read_profile(i["v"], "initial.v");
  }

  if (const YAML::Node mc = root["monte_carlo"]) {
    require_keys(mc, "monte_carlo", {"n_trajectories", "horizon", "burn_in", "thinning"});
    read(mc, "monte_carlo", "n_trajectories", c.monte_carlo.n_trajectories);
    read(mc, "monte_carlo", "horizon", c.monte_carlo.horizon);
    read(mc, "monte_carlo", "burn_in", c.monte_carlo.burn_in);
    read(mc, "monte_carlo", "thinning", c.monte_carlo.thinning);
  }

  if (const YAML::Node sd = root["seeds"]) {
    require_keys(sd, "seeds", {"root_seed", "n_replicates"});
    read(sd, "seeds", "root_seed", c.root_seed);
    read(sd, "seeds", "n_replicates", c.n_replicates);
  }

  if (const YAML::Node o = root["output"]) {
    require_keys(o, "output", {"directory", "formats"});
    read(o, "output", "directory", c.output_directory);
    read(o, "output", "formats", c.formats);
    for (const std::string& f : c.formats)
      if (f != "csv" && f != "json") parse_error("output.formats", "unknown format '" + f + "'");
  }

  if (const YAML::Node g = root["grids"]) {
    require_keys(g, "grids", {"dt", "n", "n_ref", "tail_cutoffs"});
    read(g, "grids", "dt", c.dt_grid);
    read(g, "grids", "n", c.n_grid);
    read(g, "grids", "n_ref", c.n_ref);
    read(g, "grids", "tail_cutoffs", c.tail_cutoffs);
  }

  if (const YAML::Node e = root["exceedance"]) {
    require_keys(e, "exceedance", {"step", "eta", "streams"});
    read(e, "exceedance", "step", c.exceedance.step);
    read(e, "exceedance", "eta", c.exceedance.eta);
    read(e, "exceedance", "streams", c.exceedance.n_streams);
  }

  if (const YAML::Node ms = root["measure"]) {
    require_keys(ms, "measure", {"sample_interval", "burn_in_samples", "samples_per_chain", "chains", "method",
                                 "budget_tolerance"});
    read(ms, "measure", "sample_interval", c.measure.sample_interval);
    read(ms, "measure", "burn_in_samples", c.measure.burn_in_samples);
    read(ms, "measure", "samples_per_chain", c.measure.samples_per_chain);
    read(ms, "measure", "chains", c.measure.n_chains);
    read(ms, "measure", "budget_tolerance", c.measure.distance.budget_tolerance);
    std::string method = to_string(c.measure.distance.method);
    read(ms, "measure", "method", method);
    if (method == "exact_lp") c.measure.distance.method = BLMethod::ExactLP;
    else if (method == "dictionary") c.measure.distance.method = BLMethod::Dictionary;
    else parse_error("measure.method", "expected exact_lp or dictionary");
  }
  return c;
}

std::vector<Violation> check_conditions(const ExperimentConfig& c) {
  std::vector<Violation> out;
  auto positive = [&](const char* name, double x) {
    if (!(x > 0.0)) out.push_back({name, x, 0.0, "model coefficients must be positive"});
  };
  positive("d1 > 0", c.model.d1);
  positive("d2 > 0", c.model.d2);
  positive("a1 > 0", c.model.a1);
  positive("a2 > 0", c.model.a2);
  positive("b1 > 0", c.model.b1);
  positive("b2 > 0", c.model.b2);
  if (c.model.p < 1) out.push_back({"p >= 1", static_cast<double>(c.model.p), 1.0, "exponent of the coupling"});
  if (!(c.model.beta >= 0.0)) out.push_back({"beta >= 0", c.model.beta, 0.0, "noise growth slope"});

  const double lambda = std::min(c.model.a1, c.model.a2);
  const double beta = c.model.family == SigmaFamily::Zero ? 0.0 : c.model.beta;
  if (needs_moment_condition(c.study) && !(lambda > 16.0 * beta * beta)) {
    out.push_back({"lambda > 16 beta^2", lambda, 16.0 * beta * beta, "dissipation must dominate noise growth"});
  }
  auto step_ok = [&](const std::string& name, double dt) {
    if (!(dt > 0.0)) out.push_back({name + " > 0", dt, 0.0, "step must be positive"});
    else if (lambda > 0.0 && !(dt < 1.0 / (4.0 * lambda)))
      out.push_back({name + " < 1/(4 lambda)", dt, 1.0 / (4.0 * lambda), "step too large"});
    if (c.scheme.dt_ceiling && !(dt <= *c.scheme.dt_ceiling))
      out.push_back({name + " <= dt_ceiling", dt, *c.scheme.dt_ceiling, "step above the configured ceiling"});
  };
  step_ok("dt", c.scheme.dt);
  const bool uses_dt_grid = c.study == Study::DtStudy || c.study == Study::DoubleLimit;
  const bool uses_n_grid = c.study == Study::NStudy || c.study == Study::DoubleLimit;
  if (uses_dt_grid) {
    if (c.dt_grid.empty()) out.push_back({"grids.dt nonempty", 0.0, 1.0, "refinement needs a dt grid"});
    for (std::size_t k = 0; k < c.dt_grid.size(); ++k) {
      step_ok("grids.dt[" + std::to_string(k) + "]", c.dt_grid[k]);
      if (k > 0 && c.dt_grid[k] > c.dt_grid[k - 1])
        out.push_back({"grids.dt decreasing", c.dt_grid[k], c.dt_grid[k - 1], "dt grid must decrease"});
    }
  }
  if (c.scheme.n_sites < 0) out.push_back({"n_sites >= 0", static_cast<double>(c.scheme.n_sites), 0.0, ""});
  if (uses_n_grid) {
    if (c.n_grid.empty()) out.push_back({"grids.n nonempty", 0.0, 1.0, "refinement needs an N grid"});
    for (std::size_t k = 0; k < c.n_grid.size(); ++k) {
      if (c.n_grid[k] < 0) out.push_back({"grids.n >= 0", static_cast<double>(c.n_grid[k]), 0.0, ""});
      if (k > 0 && c.n_grid[k] <= c.n_grid[k - 1])
        out.push_back({"grids.n increasing", static_cast<double>(c.n_grid[k]), static_cast<double>(c.n_grid[k - 1]), ""});
    }
    if (c.study == Study::NStudy && !c.n_grid.empty() && c.n_ref < c.n_grid.back())
      out.push_back({"n_ref >= max(grids.n)", static_cast<double>(c.n_ref), static_cast<double>(c.n_grid.back()), ""});
  }
  if (c.study == Study::Tails) {
    if (c.tail_cutoffs.empty()) out.push_back({"grids.tail_cutoffs nonempty", 0.0, 1.0, "tail study needs cutoffs"});
    for (int I : c.tail_cutoffs) {
      if (I < 0 || I >= c.scheme.n_sites)
        out.push_back({"tail cutoff < N", static_cast<double>(I), static_cast<double>(c.scheme.n_sites),
                       "cutoffs must lie in [0, N)"});
    }
  }
  if (c.model.lipschitz) {
    ModelParams m;
    m.sigma_family = c.model.family;
    m.beta = c.model.beta;
    m.delta = c.model.delta.build(c.max_truncation());
    const double certified = m.noise().lipschitz();
    if (!(*c.model.lipschitz >= certified))
      out.push_back({"L_sigma >= certified Lipschitz constant", *c.model.lipschitz, certified,
                     "supplied constant is smaller than the noise family allows"});
  }
  if ((c.study == Study::Moments || c.study == Study::Tails || c.study == Study::Invariant) &&
      c.monte_carlo.n_trajectories == 0) {
    out.push_back({"monte_carlo.n_trajectories > 0", 0.0, 1.0, ""});
  }
  if (c.monte_carlo.thinning == 0) out.push_back({"monte_carlo.thinning > 0", 0.0, 1.0, ""});
  if (c.workers < 1) out.push_back({"workers >= 1", static_cast<double>(c.workers), 1.0, ""});
  return out;
}

ExperimentConfig validate_config(const std::string& text) {
  ExperimentConfig c = parse_config(text);
  std::vector<Violation> v = check_conditions(c);
  if (!v.empty()) throw ConditionViolated(std::move(v));
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json model{
      {"d1", c.model.d1}, {"d2", c.model.d2}, {"a1", c.model.a1}, {"a2", c.model.a2},
      {"b1", c.model.b1}, {"b2", c.model.b2}, {"p", c.model.p},
      {"f", profile_json(c.model.f)}, {"g", profile_json(c.model.g)}, {"h", profile_json(c.model.h)},
      {"noise", {{"family", to_string(c.model.family)}, {"beta", c.model.beta}, {"delta", profile_json(c.model.delta)}}},
  };
  if (c.model.lipschitz) model["noise"]["lipschitz"] = *c.model.lipschitz;
  nlohmann::json scheme{{"dt", c.scheme.dt},
                        {"n_sites", c.scheme.n_sites},
                        {"boundary", to_string(c.scheme.boundary)},
                        {"newton_tol", c.scheme.newton_tol},
                        {"newton_max_iters", c.scheme.newton_max_iters},
                        {"fallback_max_iters", c.scheme.fallback_max_iters}};
  if (c.scheme.trust_radius) scheme["trust_radius"] = *c.scheme.trust_radius;
  if (c.scheme.dt_ceiling) scheme["dt_ceiling"] = *c.scheme.dt_ceiling;
  return nlohmann::json{
      {"study", to_string(c.study)},
      {"model", model},
      {"scheme", scheme},
      {"initial", {{"u", profile_json(c.initial_u)}, {"v", profile_json(c.initial_v)}}},
      {"monte_carlo",
       {{"n_trajectories", c.monte_carlo.n_trajectories}, {"horizon", c.monte_carlo.horizon},
        {"burn_in", c.monte_carlo.burn_in}, {"thinning", c.monte_carlo.thinning}}},
      {"seeds", {{"root_seed", c.root_seed}, {"n_replicates", c.n_replicates}}},
      {"output", {{"formats", c.formats}}},
      {"grids", {{"dt", c.dt_grid}, {"n", c.n_grid}, {"n_ref", c.n_ref}, {"tail_cutoffs", c.tail_cutoffs}}},
      {"exceedance", {{"step", c.exceedance.step}, {"eta", c.exceedance.eta}, {"streams", c.exceedance.n_streams}}},
      {"measure",
       {{"sample_interval", c.measure.sample_interval}, {"burn_in_samples", c.measure.burn_in_samples},
        {"samples_per_chain", c.measure.samples_per_chain}, {"chains", c.measure.n_chains},
        {"method", to_string(c.measure.distance.method)}, {"budget_tolerance", c.measure.distance.budget_tolerance}}},
  };
}

}  // namespace selkov
