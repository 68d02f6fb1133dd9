#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "selkov/config.hpp"
#include "selkov/ops_check.hpp"
#include "selkov/reports.hpp"

namespace selkov {

const char* version() noexcept;

struct FileRecord {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::filesystem::path directory;
  std::string study;
  std::string config_hash;
  std::string version;
  double wall_clock_seconds = 0.0;
  std::vector<FileRecord> files;  // every file in the directory except the manifest
  bool checks_passed = true;      // false when an ops-check property failed
  nlohmann::json json;            // what manifest.json holds
};

inline constexpr const char* kManifestName = "manifest.json";

/// sha256 of the canonical config JSON.
std::string config_hash(const ExperimentConfig& cfg);

/// Runs the configured study into cfg.output_directory and writes the
/// manifest last. Condition breaches are raised before any simulation.
RunManifest run(const ExperimentConfig& cfg);

/// Tidy per-figure CSVs; each returns the files it wrote.
std::vector<std::filesystem::path> emit_plot_data(const MomentReport& report, const std::filesystem::path& dir);
std::vector<std::filesystem::path> emit_plot_data(const TailReport& report, const std::filesystem::path& dir);
std::vector<std::filesystem::path> emit_plot_data(const StudyReport& report, const std::filesystem::path& dir);

void write_ops_check(const std::vector<OpsCheckResult>& results, const std::filesystem::path& path);

}  // namespace selkov
