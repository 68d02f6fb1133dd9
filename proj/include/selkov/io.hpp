#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "selkov/studies.hpp"

namespace selkov {

using CsvRow = std::vector<std::string>;

/// %.17g, which round-trips every double; NaN becomes the empty field.
std::string format_double(double x);
/// Inverse of format_double; the empty field reads as NaN.
double parse_double(const std::string& field);

std::string csv_escape(const std::string& field);
std::string csv_line(const CsvRow& row);

/// RFC 4180 records. Lines starting with '#' before the header are comments.
std::vector<CsvRow> parse_csv(const std::string& text, std::vector<std::string>* comments = nullptr);
std::vector<CsvRow> read_csv(const std::filesystem::path& path, std::vector<std::string>* comments = nullptr);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

void write_csv(const std::filesystem::path& path, const CsvRow& header, const std::vector<CsvRow>& rows,
               const std::vector<std::string>& comments = {});

inline const CsvRow kLongHeader{"study", "dt", "n", "seed", "statistic", "value", "ci_low", "ci_high"};

CsvRow long_row(const StudyRow& r);
StudyRow parse_long_row(const CsvRow& fields);
void write_long_csv(const std::filesystem::path& path, const std::vector<StudyRow>& rows);
std::vector<StudyRow> read_long_csv(const std::filesystem::path& path);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Stable, sorted-key serialization of a JSON value with a trailing newline.
std::string dump_json(const nlohmann::json& j);

}  // namespace selkov
