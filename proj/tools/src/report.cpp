#include "espresso/cli/report.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace espresso::cli {

namespace {

bool needs_quoting(const std::string& text) {
  return text.find_first_of(",\"\n\r") != std::string::npos;
}

std::string csv_field(const std::string& text) {
  if (!needs_quoting(text)) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// RFC 4180 splitting of one record; quoted fields may not span lines.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw std::runtime_error("report: unterminated quote in '" + line + "'");
  fields.push_back(std::move(field));
  return fields;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

ReportFormat parse_report_format(const std::string& text) {
  if (text == "csv") return ReportFormat::csv;
  if (text == "structured") return ReportFormat::structured;
  throw std::invalid_argument("unknown report format '" + text + "' (csv|structured)");
}

std::string to_string(ReportFormat format) {
  return format == ReportFormat::csv ? "csv" : "structured";
}

std::string format_cell(const Cell& cell) {
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  const double v = std::get<double>(cell);
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::runtime_error("report: cannot format value");
  std::string text(buf.data(), end);
  if (text.find_first_of(".e") == std::string::npos) text += ".0";
  return text;
}

Cell parse_cell(const std::string& text) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (text.empty()) return text;
  std::int64_t i = 0;
  if (auto [end, ec] = std::from_chars(first, last, i); ec == std::errc() && end == last) return i;
  if (text == "nan") return std::nan("");
  if (text == "inf") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  double d = 0.0;
  if (auto [end, ec] = std::from_chars(first, last, d); ec == std::errc() && end == last) return d;
  return text;
}

void Report::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw std::invalid_argument("report row has " + std::to_string(row.size()) +
                                " cells, header has " + std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

std::size_t Report::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw std::out_of_range("report has no column '" + name + "'");
}

void write_report(const Report& report, ReportFormat format, std::ostream& out) {
  for (const auto& row : report.rows) {
    if (row.size() != report.columns.size()) {
      throw std::invalid_argument("report rows must match the header width");
    }
  }
  if (format == ReportFormat::csv) {
    for (std::size_t c = 0; c < report.columns.size(); ++c) {
      out << (c ? "," : "") << csv_field(report.columns[c]);
    }
    out << '\n';
    for (const auto& row : report.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        out << (c ? "," : "") << csv_field(format_cell(row[c]));
      }
      out << '\n';
    }
    return;
  }
  for (std::size_t r = 0; r < report.rows.size(); ++r) {
    if (r) out << '\n';
    for (std::size_t c = 0; c < report.columns.size(); ++c) {
      out << report.columns[c] << '=' << format_cell(report.rows[r][c]) << '\n';
    }
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot replace " + path.string() + ": " + ec.message());
  }
}

void write_report(const Report& report, ReportFormat format, const std::filesystem::path& path) {
  std::ostringstream buffer;
  write_report(report, format, buffer);
  write_file_atomic(path, buffer.str());
}

Report parse_report(std::istream& in, ReportFormat format) {
  std::string line;
  if (format == ReportFormat::csv) {
    if (!std::getline(in, line)) throw std::runtime_error("report: missing csv header");
    Report report(split_csv_line(strip_cr(line)));
    while (std::getline(in, line)) {
      line = strip_cr(line);
      if (line.empty()) continue;
      std::vector<Cell> row;
      for (const auto& field : split_csv_line(line)) row.push_back(parse_cell(field));
      report.add_row(std::move(row));
    }
    return report;
  }

  Report report;
  std::vector<std::string> keys;
  std::vector<Cell> row;
  auto flush = [&] {
    if (keys.empty()) return;
    if (report.columns.empty() && report.rows.empty()) report.columns = keys;
    if (keys != report.columns) throw std::runtime_error("report: inconsistent structured keys");
    report.add_row(std::move(row));
    keys.clear();
    row.clear();
  };
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) {
      flush();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("report: expected key=value, got '" + line + "'");
    keys.push_back(line.substr(0, eq));
    row.push_back(parse_cell(line.substr(eq + 1)));
  }
  flush();
  return report;
}

Report read_report(const std::filesystem::path& path, ReportFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_report(in, format);
}

}  // namespace espresso::cli
