#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace crdnn::util {

// Shortest representation that round-trips exactly.
std::string format_double(double v);
double parse_double(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

} // namespace crdnn::util
