#include "gmp/csv.hpp"

#include <charconv>
#include <cstdio>

#include "gmp/errors.hpp"

namespace gmp::csv {

std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::vector<std::string_view> split_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
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
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view text, std::size_t line, std::string_view field) {
  text = trim(text);
  if (text == "inf" || text == "-inf" || text == "nan" || text == "-nan") {
    throw ParseError("non-finite value '" + std::string(text) + "'", line, std::string(field));
  }
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ParseError("expected a number, got '" + std::string(text) + "'", line, std::string(field));
  }
  return v;
}

std::int64_t parse_int(std::string_view text, std::size_t line, std::string_view field) {
  text = trim(text);
  std::int64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ParseError("expected an integer, got '" + std::string(text) + "'", line, std::string(field));
  }
  return v;
}

}  // namespace gmp::csv
