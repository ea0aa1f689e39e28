#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gmp::csv {

// Shortest-safe round-trip form: 17 significant digits.
std::string format_double(double v);

std::vector<std::string_view> split_line(std::string_view line);

// Throw ParseError (with line/field) on malformed numbers.
double parse_double(std::string_view text, std::size_t line, std::string_view field);
std::int64_t parse_int(std::string_view text, std::size_t line, std::string_view field);

std::string_view trim(std::string_view s);

}  // namespace gmp::csv
