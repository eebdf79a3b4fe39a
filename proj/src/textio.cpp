#include "roiadapt/textio.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "roiadapt/error.hpp"

namespace roiadapt::textio {
namespace {

std::string where(const CsvRow& row) { return "line " + std::to_string(row.line); }

template <typename T>
T parse_number(const CsvRow& row, std::size_t col) {
  if (col >= row.fields.size()) throw ParseError(where(row) + ": missing column " + std::to_string(col));
  const auto& s = row.fields[col];
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(where(row) + ": cannot parse '" + s + "' as a number");
  return value;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << contents;
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<CsvRow> parse_csv(std::string_view text, const std::vector<std::string>& header, const std::string& source) {
  std::vector<CsvRow> rows;
  bool seen_header = false;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    auto fields = split(line, ',');
    if (!seen_header) {
      if (fields != header) {
        std::string expected;
        for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
        throw ParseError(source + ":" + std::to_string(line_no) + ": expected header '" + expected + "'");
      }
      seen_header = true;
    } else {
      if (fields.size() != header.size())
        throw ParseError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                         " fields, got " + std::to_string(fields.size()));
      rows.push_back({line_no, std::move(fields)});
    }
    if (end == text.size()) break;
  }
  if (!seen_header) throw ParseError(source + ": empty CSV (no header)");
  return rows;
}

std::vector<CsvRow> read_csv(const std::string& path, const std::vector<std::string>& header) {
  return parse_csv(read_file(path), header, path);
}

int to_int(const CsvRow& row, std::size_t col) { return parse_number<int>(row, col); }
std::int64_t to_int64(const CsvRow& row, std::size_t col) { return parse_number<std::int64_t>(row, col); }
double to_double(const CsvRow& row, std::size_t col) { return parse_number<double>(row, col); }

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace roiadapt::textio
