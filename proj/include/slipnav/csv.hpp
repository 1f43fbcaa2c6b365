#ifndef SLIPNAV_CSV_HPP_
#define SLIPNAV_CSV_HPP_

#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "slipnav/nav_core.hpp"

namespace slipnav {

/// Malformed file content; the message names the file and line.
class ParseError : public InputError {
 public:
  ParseError(const std::string& file, long line, const std::string& what);

  const std::string& file() const { return file_; }
  long line() const { return line_; }

 private:
  std::string file_;
  long line_;
};

/// Shortest round-trip decimal form, independent of the global locale.
std::string format_double(double value);

/// Parses a whole field as a double; throws ParseError on any leftover text.
double parse_double(std::string_view text, const std::string& file, long line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<long> line_numbers;  // source line of each row
};

/// Reads a numeric CSV with a header row. If `expected_header` is non-empty
/// the header must match it exactly.
CsvTable read_csv(const std::string& path, const std::vector<std::string>& expected_header = {});

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  void row(const std::vector<double>& values);
  /// Row with pre-formatted text cells.
  void text_row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::string path_;
  std::size_t columns_;
};

}  // namespace slipnav

#endif  // SLIPNAV_CSV_HPP_
