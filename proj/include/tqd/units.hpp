#pragma once

#include <cmath>
#include <compare>
#include <string>

#include "tqd/errors.hpp"

namespace tqd {

// Internal units are seconds, bits and bits/second. Milliseconds and Mbit/s
// only exist at the command-line boundary.

class Seconds {
public:
    constexpr Seconds() = default;
    explicit Seconds(double s) : value_(s)
    {
        if (!std::isfinite(s) || s < 0.0)
            throw InvalidArgument("seconds must be finite and >= 0, got " + std::to_string(s));
    }

    constexpr double value() const noexcept { return value_; }
    constexpr auto operator<=>(const Seconds&) const = default;

private:
    double value_ = 0.0;
};

class BitsPerSecond {
public:
    explicit BitsPerSecond(double bps) : value_(bps)
    {
        if (!std::isfinite(bps) || bps <= 0.0)
            throw InvalidArgument("rate must be finite and > 0, got " + std::to_string(bps));
    }

    constexpr double value() const noexcept { return value_; }
    constexpr auto operator<=>(const BitsPerSecond&) const = default;

private:
    double value_;
};

class Bits {
public:
    constexpr Bits() = default;
    explicit Bits(double b) : value_(b)
    {
        if (!std::isfinite(b) || b < 0.0)
            throw InvalidArgument("bits must be finite and >= 0, got " + std::to_string(b));
    }

    constexpr double value() const noexcept { return value_; }
    constexpr auto operator<=>(const Bits&) const = default;

private:
    double value_ = 0.0;
};

} // namespace tqd
