#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace leakbench {

// Locale-independent float formatting (std::to_chars underneath).
// fmt_double: shortest representation that round-trips.
// fmt_g6: 6 significant digits, used by the report writers.
std::string fmt_double(double v);
std::string fmt_g6(double v);

double parse_double(std::string_view s, const std::string& context);
long parse_long(std::string_view s, const std::string& context);

std::vector<std::string> split(std::string_view line, char sep);
std::string trim(std::string_view s);

}  // namespace leakbench
