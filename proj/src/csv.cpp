#include "slipnav/csv.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

namespace slipnav {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

ParseError::ParseError(const std::string& file, long line, const std::string& what)
    : InputError(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, const std::string& file, long line) {
  const std::string_view t = trim(text);
  if (t.empty()) {
    throw ParseError(file, line, "empty numeric field");
  }
  double value = 0.0;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, t.data() + t.size(), value);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ParseError(file, line, "invalid number '" + std::string(t) + "'");
  }
  return value;
}

CsvTable read_csv(const std::string& path, const std::vector<std::string>& expected_header) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open " + path);
  }
  CsvTable table;
  std::string line;
  long line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto fields = split(view);
    if (!have_header) {
      for (auto f : fields) table.header.emplace_back(trim(f));
      if (!expected_header.empty() && table.header != expected_header) {
        std::string want;
        for (const auto& h : expected_header) want += (want.empty() ? "" : ",") + h;
        throw ParseError(path, line_no, "unexpected header, expected '" + want + "'");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw ParseError(path, line_no,
                       "expected " + std::to_string(table.header.size()) + " fields, found " +
                           std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) {
      const double v = parse_double(f, path, line_no);
      if (!std::isfinite(v)) throw ParseError(path, line_no, "non-finite value");
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) {
    throw ParseError(path, line_no, "missing header row");
  }
  return table;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path), path_(path), columns_(header.size()) {
  if (!out_) {
    throw InputError("cannot write " + path);
  }
  text_row(header);
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  text_row(cells);
}

void CsvWriter::text_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) {
    throw InputError("CsvWriter: row width does not match the header of " + path_);
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  if (!out_) throw InputError("write failed: " + path_);
}

}  // namespace slipnav
