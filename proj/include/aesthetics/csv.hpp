#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace aesthetics::csv {

// Plain comma split; the formats here never quote fields.
inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

// Yields (line_number, content) pairs; a single trailing newline is allowed,
// a trailing CR is stripped.
inline std::vector<std::pair<std::size_t, std::string_view>> split_lines(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> lines;
  std::size_t start = 0;
  std::size_t number = 1;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(number++, line);
    start = end + 1;
  }
  return lines;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
  if (field.empty()) return false;
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace aesthetics::csv
