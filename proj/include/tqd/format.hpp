#pragma once

#include <string>

namespace tqd {

// Shortest decimal text that parses back to the same double. Integral values
// below 1e15 are written without exponent ("100000000", not "1e+08").
std::string format_number(double v);

} // namespace tqd
