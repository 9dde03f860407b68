#include "tqd/piecewise.hpp"

#include <algorithm>
#include <cmath>

#include "tqd/errors.hpp"

namespace tqd {

RateFunction::RateFunction(std::vector<RatePiece> pieces, double end_value)
    : pieces_(std::move(pieces)), end_value_(end_value)
{
    if (pieces_.empty())
        throw InvalidArgument("rate function needs at least one piece");
    if (pieces_.front().t0 != 0.0)
        throw InvalidArgument("rate function must start at t = 0");
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        const auto& p = pieces_[i];
        if (!(p.t1 > p.t0))
            throw InvalidArgument("rate function pieces must have positive length");
        if (i + 1 < pieces_.size() && pieces_[i + 1].t0 != p.t1)
            throw InvalidArgument("rate function pieces must be contiguous");
    }
}

RateFunction RateFunction::constant(double value, double horizon)
{
    return RateFunction({RatePiece{0.0, horizon, value, 0.0}}, value);
}

std::size_t RateFunction::piece_index(double t) const
{
    if (t < 0.0 || t > horizon())
        throw InvalidArgument("time outside rate function domain");
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                               [](double v, const RatePiece& p) { return v < p.t1; });
    if (it == pieces_.end())
        return pieces_.size() - 1;
    return static_cast<std::size_t>(it - pieces_.begin());
}

double RateFunction::at(double t) const
{
    if (t == horizon())
        return end_value_;
    return pieces_[piece_index(t)].at(t);
}

double RateFunction::integral(double t0, double t1) const
{
    if (t0 > t1)
        throw InvalidArgument("inverted integration interval");
    if (t0 < 0.0 || t1 > horizon())
        throw InvalidArgument("integration interval outside rate function domain");
    if (t0 == t1)
        return 0.0;
    double sum = 0.0;
    for (std::size_t i = piece_index(t0); i < pieces_.size(); ++i) {
        const auto& p = pieces_[i];
        if (p.t0 >= t1)
            break;
        const double a = std::max(t0, p.t0);
        const double b = std::min(t1, p.t1);
        if (b > a)
            sum += p.integral(a, b);
    }
    return sum;
}

double RateFunction::min_value() const
{
    double m = end_value_;
    for (const auto& p : pieces_)
        m = std::min({m, p.r0, p.end_value()});
    return m;
}

RateFunction RateFunction::delayed(double delay, double initial) const
{
    const double h = horizon();
    if (delay <= 0.0)
        return *this;
    if (delay >= h)
        return constant(initial, h);

    std::vector<RatePiece> out;
    out.push_back({0.0, delay, initial, 0.0});
    double end_value = end_value_;
    for (const auto& p : pieces_) {
        const double a = p.t0 + delay;
        if (a >= h)
            break;
        const double b = std::min(p.t1 + delay, h);
        out.push_back({a, b, p.r0, p.slope});
        if (b == h)
            end_value = p.at(h - delay);
    }
    // The last shifted piece may end exactly at the horizon through rounding
    // of p.t1 + delay; make the tail contiguous.
    out.back().t1 = h;
    return RateFunction(std::move(out), end_value);
}

RateFunction RateFunction::truncated(double h) const
{
    if (!(h > 0.0) || h > horizon())
        throw InvalidArgument("truncation horizon outside rate function domain");
    if (h == horizon())
        return *this;
    std::vector<RatePiece> out;
    for (const auto& p : pieces_) {
        if (p.t0 >= h)
            break;
        out.push_back({p.t0, std::min(p.t1, h), p.r0, p.slope});
    }
    return RateFunction(std::move(out), at(h));
}

RateFunction RateFunction::with_constant(double from, double to, double value) const
{
    to = std::min(to, horizon());
    if (!(to > from))
        return *this;
    std::vector<RatePiece> out;
    bool inserted = false;
    for (const auto& p : pieces_) {
        if (p.t1 <= from || p.t0 >= to) {
            out.push_back(p);
            continue;
        }
        if (p.t0 < from)
            out.push_back({p.t0, from, p.r0, p.slope});
        if (!inserted) {
            out.push_back({from, to, value, 0.0});
            inserted = true;
        }
        if (p.t1 > to)
            out.push_back({to, p.t1, p.at(to), p.slope});
    }
    const double end_value = to >= horizon() ? value : end_value_;
    return RateFunction(std::move(out), end_value);
}

} // namespace tqd
