#include "selkov/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

namespace selkov {

std::string format_double(double x) {
  if (std::isnan(x)) return "";
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", x);
  return buf.data();
}

double parse_double(const std::string& field) {
  if (field.empty()) return std::numeric_limits<double>::quiet_NaN();
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size()) throw Error(ErrorKind::ParseError, "not a number: '" + field + "'");
  return x;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string csv_line(const CsvRow& row) {
  std::string out;
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (k) out += ',';
    out += csv_escape(row[k]);
  }
  return out + "\r\n";
}

std::vector<CsvRow> parse_csv(const std::string& text, std::vector<std::string>* comments) {
  std::vector<CsvRow> rows;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n && text[i] == '#') {
    std::size_t e = text.find('\n', i);
    if (e == std::string::npos) e = n;
    std::string line = text.substr(i, e - i);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (comments) comments->push_back(line);
    i = e + 1;
  }
  CsvRow row;
  std::string field;
  bool quoted = false, any = false;
  while (i < n) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      ++i;
      continue;
    }
    if (c == '"') {
      if (!field.empty()) throw Error(ErrorKind::ParseError, "quote inside an unquoted CSV field");
      quoted = any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < n && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
    ++i;
  }
  if (quoted) throw Error(ErrorKind::ParseError, "unterminated quoted CSV field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<CsvRow> read_csv(const std::filesystem::path& path, std::vector<std::string>* comments) {
  return parse_csv(read_text(path), comments);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_csv(const std::filesystem::path& path, const CsvRow& header, const std::vector<CsvRow>& rows,
               const std::vector<std::string>& comments) {
  std::string text;
  for (const auto& c : comments) text += "# " + c + "\r\n";
  text += csv_line(header);
  for (const auto& r : rows) text += csv_line(r);
  write_text(path, text);
}

CsvRow long_row(const StudyRow& r) {
  return {r.study,       format_double(r.dt), std::to_string(r.n),      std::to_string(r.seed),
          r.statistic,   format_double(r.value), format_double(r.ci_low), format_double(r.ci_high)};
}

StudyRow parse_long_row(const CsvRow& f) {
  if (f.size() != kLongHeader.size()) throw Error(ErrorKind::ParseError, "long-format row needs 8 fields");
  StudyRow r;
  r.study = f[0];
  r.dt = parse_double(f[1]);
  r.n = std::stoi(f[2]);
  r.seed = std::stoull(f[3]);
  r.statistic = f[4];
  r.value = parse_double(f[5]);
  r.ci_low = parse_double(f[6]);
  r.ci_high = parse_double(f[7]);
  return r;
}

void write_long_csv(const std::filesystem::path& path, const std::vector<StudyRow>& rows) {
  std::vector<CsvRow> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(long_row(r));
  write_csv(path, kLongHeader, out);
}

std::vector<StudyRow> read_long_csv(const std::filesystem::path& path) {
  const auto rows = read_csv(path);
  if (rows.empty() || rows.front() != kLongHeader) throw Error(ErrorKind::ParseError, path.string() + ": bad header");
  std::vector<StudyRow> out;
  for (std::size_t k = 1; k < rows.size(); ++k) out.push_back(parse_long_row(rows[k]));
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
    throw Error(ErrorKind::IoError, "sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[md[k] >> 4];
    out += hex[md[k] & 15];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text(path)); }

std::string dump_json(const nlohmann::json& j) { return j.dump(2, ' ', false) + "\n"; }

}  // namespace selkov
