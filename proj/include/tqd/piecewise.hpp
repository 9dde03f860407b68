#pragma once

#include <span>
#include <vector>

namespace tqd {

// One linear piece on [t0, t1): value(t) = r0 + slope * (t - t0).
struct RatePiece {
    double t0;
    double t1;
    double r0;
    double slope;

    double at(double t) const noexcept { return r0 + slope * (t - t0); }
    double end_value() const noexcept { return r0 + slope * (t1 - t0); }
    // Exact integral over [a, b], a and b inside the piece.
    double integral(double a, double b) const noexcept { return 0.5 * (at(a) + at(b)) * (b - a); }
};

// Right-continuous piecewise-linear function on [0, horizon]. Jumps are
// allowed between pieces. The value at the horizon itself is end_value_.
class RateFunction {
public:
    RateFunction() = default;
    RateFunction(std::vector<RatePiece> pieces, double end_value);

    static RateFunction constant(double value, double horizon);

    double at(double t) const;
    double integral(double t0, double t1) const;
    double horizon() const noexcept { return pieces_.empty() ? 0.0 : pieces_.back().t1; }
    double min_value() const;

    std::span<const RatePiece> pieces() const noexcept { return pieces_; }

    // g(t) = f(t - delay) for t >= delay, `initial` on [0, delay). The result
    // keeps this function's horizon.
    RateFunction delayed(double delay, double initial) const;

    // Restriction to [0, horizon].
    RateFunction truncated(double horizon) const;

    // Replaces the values on [from, to) with a constant.
    RateFunction with_constant(double from, double to, double value) const;

    // Index of the piece containing t (the last piece for t == horizon).
    std::size_t piece_index(double t) const;

private:
    std::vector<RatePiece> pieces_;
    double end_value_ = 0.0;
};

} // namespace tqd
