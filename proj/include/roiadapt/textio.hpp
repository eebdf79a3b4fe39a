#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace roiadapt::textio {

struct CsvRow {
  int line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

std::string read_file(const std::string& path);
// Writes atomically enough for our purposes: truncates and writes in one go.
void write_file(const std::string& path, const std::string& contents);

// Parses CSV text. Lines starting with '#' and blank lines are skipped. The
// first remaining line must equal `header`; every data row must have the same
// number of fields. Throws ParseError naming the file and line.
std::vector<CsvRow> parse_csv(std::string_view text, const std::vector<std::string>& header,
                              const std::string& source = "<csv>");
std::vector<CsvRow> read_csv(const std::string& path, const std::vector<std::string>& header);

int to_int(const CsvRow& row, std::size_t col);
std::int64_t to_int64(const CsvRow& row, std::size_t col);
double to_double(const CsvRow& row, std::size_t col);

// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);

std::vector<std::string> split(std::string_view s, char sep);

}  // namespace roiadapt::textio
