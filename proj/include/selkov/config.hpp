#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "selkov/errors.hpp"
#include "selkov/studies.hpp"

namespace selkov {

enum class Study : std::uint8_t { Simulate, Moments, Tails, Invariant, DtStudy, NStudy, DoubleLimit, ValidateOps };

const char* to_string(Study s) noexcept;
Study study_from_string(const std::string& name);

/// A lattice sequence on |i| <= extent:
///   zero, constant (amplitude), box (amplitude on |i| <= radius),
///   power (amplitude (1+|i|)^-exponent), gaussian (amplitude exp(-i^2 / (2 width^2))),
///   explicit (values, centered, odd length).
struct ProfileSpec {
  std::string kind = "zero";
  double amplitude = 0.0;
  int radius = 0;
  double exponent = 2.0;
  double width = 1.0;
  std::vector<double> values;
  std::optional<int> extent;  // defaults to the largest truncation in the config

  Field build(int default_extent) const;
};

struct ModelSpec {
  double d1 = 1.0, d2 = 1.0, a1 = 1.0, a2 = 1.0, b1 = 1.0, b2 = 1.0;
  int p = 1;
  ProfileSpec f, g, h, delta;
  SigmaFamily family = SigmaFamily::Zero;
  double beta = 0.0;
  std::optional<double> lipschitz;  // supplied L_sigma, checked against the certified one
};

struct MonteCarloSpec {
  std::size_t n_trajectories = 100;
  std::size_t horizon = 200;
  std::size_t burn_in = 0;
  std::size_t thinning = 1;
};

struct ExperimentConfig {
  Study study = Study::Simulate;
  ModelSpec model;
  SchemeConfig scheme;
  ProfileSpec initial_u, initial_v;
  MonteCarloSpec monte_carlo;
  std::uint64_t root_seed = 0;
  std::size_t n_replicates = 3;
  std::string output_directory = "out";
  std::vector<std::string> formats{"csv", "json"};
  int workers = 1;

  std::vector<int> tail_cutoffs;
  std::vector<double> dt_grid;
  std::vector<int> n_grid;
  int n_ref = 0;
  ExceedanceProtocol exceedance;
  MeasureProtocol measure;

  /// Largest lattice truncation any part of the study touches.
  int max_truncation() const;
  ModelParams params() const;
  State initial_state() const;
  MonteCarlo monte_carlo_run() const;
  StudySeeds study_seeds() const;
};

/// Typed parse without cross-field checks. Throws Error(ParseError) naming the key.
ExperimentConfig parse_config(const std::string& text);

/// Every breached condition, in a fixed order; empty when the config is admissible.
std::vector<Violation> check_conditions(const ExperimentConfig& cfg);

/// parse_config then check_conditions; throws ConditionViolated listing all breaches.
ExperimentConfig validate_config(const std::string& text);

/// Canonical JSON (sorted keys) of everything that determines the outputs;
/// workers and the output directory are excluded.
nlohmann::json to_json(const ExperimentConfig& cfg);

}  // namespace selkov
