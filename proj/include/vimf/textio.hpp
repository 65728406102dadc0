#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "vimf/common.hpp"

namespace vimf {

/// Space-separated full-precision row, as in the checkpoint block format.
inline void write_row(std::ostream& out, const double* values, int count) {
  for (int j = 0; j < count; ++j) {
    if (j) out << ' ';
    out << format_double(values[j]);
  }
  out << '\n';
}

inline std::vector<double> parse_row(const std::string& line, int expected,
                                     std::size_t line_no) {
  std::vector<double> values;
  values.reserve(expected);
  std::size_t pos = 0;
  while (pos < line.size()) {
    auto next = line.find(' ', pos);
    if (next == std::string::npos) next = line.size();
    values.push_back(parse_double(std::string_view(line).substr(pos, next - pos)));
    pos = next + 1;
  }
  if (static_cast<int>(values.size()) != expected) {
    throw ParseError("expected " + std::to_string(expected) + " values, got " +
                         std::to_string(values.size()),
                     line_no);
  }
  return values;
}

struct LineReader {
  std::istream& in;
  std::size_t line_no = 0;

  std::string next(const char* what) {
    std::string line;
    if (!std::getline(in, line))
      throw ParseError(std::string("unexpected end of file, wanted ") + what,
                       line_no + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  bool next_optional(std::string& line) {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

  void expect(const char* literal) {
    std::string line = next(literal);
    if (line != literal)
      throw ParseError(
          "expected '" + std::string(literal) + "', got '" + line + "'",
          line_no);
  }
};

}  // namespace vimf
