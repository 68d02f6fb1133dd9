#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "selkov/harness.hpp"
#include "selkov/io.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kConditionViolated = 2;

struct Flags {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

void print_violations(const selkov::ConditionViolated& e) {
  std::cerr << "condition violated:\n";
  for (const auto& v : e.violations()) {
    std::cerr << "  " << v.name << ": actual " << selkov::format_double(v.actual) << ", required "
              << selkov::format_double(v.required);
    if (!v.detail.empty()) std::cerr << " (" << v.detail << ")";
    std::cerr << "\n";
  }
}

selkov::ExperimentConfig load(const Flags& f) {
  selkov::ExperimentConfig cfg = selkov::parse_config(selkov::read_text(f.config));
  if (f.out) cfg.output_directory = *f.out;
  if (f.seed) cfg.root_seed = *f.seed;
  if (f.workers) cfg.workers = *f.workers;
  return cfg;
}

int execute(const std::string& command, const Flags& f) {
  try {
    selkov::ExperimentConfig cfg = load(f);
    if (command == "validate") {
      const auto violations = selkov::check_conditions(cfg);
      if (!violations.empty()) throw selkov::ConditionViolated(violations);
      std::cout << "ok: " << selkov::to_string(cfg.study) << " config " << selkov::config_hash(cfg) << "\n";
      return kOk;
    }
    cfg.study = selkov::study_from_string(command);
    const selkov::RunManifest m = selkov::run(cfg);
    std::cout << m.study << ": wrote " << m.files.size() << " files and " << selkov::kManifestName << " to "
              << m.directory.string() << "\n";
    if (!m.checks_passed) {
      std::cerr << "ops-check: at least one property failed, see ops_check.csv\n";
      return kRuntimeError;
    }
    return kOk;
  } catch (const selkov::ConditionViolated& e) {
    print_violations(e);
    return kConditionViolated;
  } catch (const selkov::Error& e) {
    std::cerr << e.what() << "\n";
    return e.kind() == selkov::ErrorKind::ConfigRejected ? kConditionViolated : kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic lattice Selkov simulator and invariant-measure studies"};
  app.set_version_flag("--version", std::string(selkov::version()));
  app.require_subcommand(1);
  Flags flags;
  const char* commands[][2] = {
      {"validate", "check a config against the model conditions"},
      {"simulate", "write one trajectory"},
      {"moments", "Monte Carlo second moment against the analytic bound"},
      {"tails", "tail mass beyond lattice cutoffs"},
      {"invariant", "numerical invariant measure per replicate"},
      {"dt-study", "distances between measures along a decreasing dt grid"},
      {"n-study", "truncation convergence against a reference lattice"},
      {"double-limit", "distance matrix over dt and N to the finest cell"},
      {"ops-check", "operator, inequality, coercivity and solver property suites"},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c[0], c[1]);
    sub->add_option("--config", flags.config, "YAML config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--seed", flags.seed, "root seed");
    sub->add_option("--workers", flags.workers, "worker threads")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kRuntimeError;
  }
  for (CLI::App* sub : app.get_subcommands()) return execute(sub->get_name(), flags);
  return kRuntimeError;
}
