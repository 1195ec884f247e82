#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace nap {

// Shortest decimal that round-trips the exact double.
std::string fmt_double(double v);

// Strict full-string parse; throws ParseError on failure.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

}  // namespace nap
