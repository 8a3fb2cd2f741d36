#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace espresso::cli {

enum class ReportFormat { csv, structured };

ReportFormat parse_report_format(const std::string& text);
std::string to_string(ReportFormat format);

using Cell = std::variant<std::int64_t, double, std::string>;

/// Shortest text that parses back to the same value. Doubles always carry a
/// '.', an exponent, or a non-finite spelling so they never read back as ints.
std::string format_cell(const Cell& cell);
/// Integer if the whole text is one, else double if it is one, else string.
Cell parse_cell(const std::string& text);

/// Fixed column set; every row has one cell per column.
struct Report {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  explicit Report(std::vector<std::string> cols = {}) : columns(std::move(cols)) {}

  /// Throws std::invalid_argument when the row width differs from the header.
  void add_row(std::vector<Cell> row);
  std::size_t column(const std::string& name) const;

  friend bool operator==(const Report&, const Report&) = default;
};

/// csv: header then one line per row. structured: `key=value` lines, one
/// group per row, groups separated by a blank line.
void write_report(const Report& report, ReportFormat format, std::ostream& out);
/// Writes to a sibling temporary file and renames it over `path`. Throws
/// std::runtime_error naming the path on I/O failure.
void write_report(const Report& report, ReportFormat format, const std::filesystem::path& path);

Report parse_report(std::istream& in, ReportFormat format);
Report read_report(const std::filesystem::path& path, ReportFormat format);

/// Atomic replacement of `path` with `contents`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace espresso::cli
