#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cropspec {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Splits on a single-character delimiter; keeps empty fields.
std::vector<std::string> split(std::string_view s, char delim);

// Full-string numeric parses; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view s);
std::optional<long> parse_long(std::string_view s);

// Shortest decimal representation that round-trips the exact double.
std::string format_double(double v);

}  // namespace cropspec
