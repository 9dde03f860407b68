#include "tqd/format.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace tqd {

std::string format_number(double v)
{
    if (v == 0.0)
        return "0";
    char buf[64];
    if (std::isfinite(v) && std::fabs(v) < 1e15 && v == std::trunc(v)) {
        std::snprintf(buf, sizeof buf, "%.0f", v);
        return buf;
    }
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace tqd
