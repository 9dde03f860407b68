#include "tqd/trace.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "tqd/format.hpp"

namespace tqd {

namespace {

RateFunction build_function(const std::vector<Breakpoint>& bps)
{
    std::vector<RatePiece> pieces;
    pieces.reserve(bps.size());
    for (std::size_t i = 0; i + 1 < bps.size(); ++i) {
        const double t0 = bps[i].time.value();
        const double t1 = bps[i + 1].time.value();
        const double r0 = bps[i].rate.value();
        const double slope =
            bps[i].mode == SegmentMode::linear ? (bps[i + 1].rate.value() - r0) / (t1 - t0) : 0.0;
        pieces.push_back({t0, t1, r0, slope});
    }
    return RateFunction(std::move(pieces), bps.back().rate.value());
}

} // namespace

CapacityTrace::CapacityTrace(std::vector<Breakpoint> breakpoints, Seconds horizon)
    : breakpoints_(std::move(breakpoints)), horizon_(horizon)
{
    if (breakpoints_.empty())
        throw InvalidArgument("capacity trace needs at least one breakpoint");
    if (horizon_.value() <= 0.0)
        throw InvalidArgument("capacity trace horizon must be > 0");
    if (breakpoints_.front().time.value() != 0.0)
        throw InvalidArgument("first breakpoint must be at t = 0");
    for (std::size_t i = 1; i < breakpoints_.size(); ++i)
        if (!(breakpoints_[i].time > breakpoints_[i - 1].time))
            throw InvalidArgument("breakpoint times must be strictly increasing");
    if (breakpoints_.back().time > horizon_)
        throw InvalidArgument("breakpoint beyond trace horizon");

    auto& last = breakpoints_.back();
    if (last.time < horizon_) {
        if (last.mode == SegmentMode::linear)
            throw InvalidArgument("linear segment needs a following breakpoint");
        breakpoints_.push_back({horizon_, last.rate, SegmentMode::hold});
    } else {
        last.mode = SegmentMode::hold;
    }
    function_ = build_function(breakpoints_);
}

BitsPerSecond CapacityTrace::capacity_at(Seconds t) const
{
    if (t > horizon_)
        throw InvalidArgument("time " + format_number(t.value()) + " s outside trace horizon");
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t,
                               [](Seconds v, const Breakpoint& b) { return v < b.time; });
    const auto i = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
    const auto& b = breakpoints_[i];
    if (i + 1 == breakpoints_.size() || b.mode == SegmentMode::hold)
        return b.rate;
    const auto& n = breakpoints_[i + 1];
    const double frac = (t.value() - b.time.value()) / (n.time.value() - b.time.value());
    return BitsPerSecond(b.rate.value() + (n.rate.value() - b.rate.value()) * frac);
}

Bits CapacityTrace::integrate(Seconds t0, Seconds t1) const
{
    if (t0 > t1)
        throw InvalidArgument("inverted integration interval");
    if (t1 > horizon_)
        throw InvalidArgument("integration interval outside trace horizon");
    return Bits(function_.integral(t0.value(), t1.value()));
}

double CapacityTrace::min_rate() const
{
    double m = breakpoints_.front().rate.value();
    for (const auto& b : breakpoints_)
        m = std::min(m, b.rate.value());
    return m;
}

CapacityTrace make_step_trace(BitsPerSecond pre_rate, BitsPerSecond post_rate, Seconds onset,
                              Seconds horizon)
{
    if (!(post_rate < pre_rate))
        throw InvalidArgument("step trace: post_rate must be below pre_rate");
    if (onset.value() <= 0.0 || !(onset < horizon))
        throw InvalidArgument("step trace: onset must lie in (0, horizon)");
    return CapacityTrace({{Seconds(0.0), pre_rate, SegmentMode::hold},
                          {onset, post_rate, SegmentMode::hold}},
                         horizon);
}

CapacityTrace make_ramp_trace(BitsPerSecond pre_rate, BitsPerSecond post_rate, Seconds onset,
                              Seconds ramp_duration, Seconds horizon)
{
    if (ramp_duration.value() == 0.0)
        return make_step_trace(pre_rate, post_rate, onset, horizon);
    if (!(post_rate < pre_rate))
        throw InvalidArgument("ramp trace: post_rate must be below pre_rate");
    if (onset.value() <= 0.0 || !(onset < horizon))
        throw InvalidArgument("ramp trace: onset must lie in (0, horizon)");
    const Seconds end(onset.value() + ramp_duration.value());
    if (end > horizon)
        throw InvalidArgument("ramp trace: ramp extends past horizon");
    return CapacityTrace({{Seconds(0.0), pre_rate, SegmentMode::hold},
                          {onset, pre_rate, SegmentMode::linear},
                          {end, post_rate, SegmentMode::hold}},
                         horizon);
}

BitsPerSecond capacity_at(const CapacityTrace& trace, Seconds t) { return trace.capacity_at(t); }

Bits integrate_capacity(const CapacityTrace& trace, Seconds t0, Seconds t1)
{
    return trace.integrate(t0, t1);
}

std::vector<CapacityEvent> detect_events(const CapacityTrace& trace)
{
    const auto& bps = trace.breakpoints();
    std::vector<CapacityEvent> events;

    bool in_run = false;
    double run_start = 0.0;
    double run_pre = 0.0;
    double run_end = 0.0;
    std::size_t run_end_index = 0;

    auto close_run = [&] {
        if (!in_run)
            return;
        events.push_back({Seconds(run_start), BitsPerSecond(run_pre),
                          bps[run_end_index].rate, Seconds(run_end - run_start)});
        in_run = false;
    };
    auto extend_run = [&](double start, double pre, double end, std::size_t end_index) {
        if (!in_run) {
            in_run = true;
            run_start = start;
            run_pre = pre;
        }
        run_end = end;
        run_end_index = end_index;
    };

    for (std::size_t i = 0; i < bps.size(); ++i) {
        const double t = bps[i].time.value();
        const double rate = bps[i].rate.value();
        if (i > 0) {
            // Only a hold segment can end in a jump.
            const auto& prev = bps[i - 1];
            const double left = prev.mode == SegmentMode::hold ? prev.rate.value() : rate;
            if (rate < left)
                extend_run(t, left, t, i);
            else if (rate > left)
                close_run();
        }
        if (i + 1 < bps.size()) {
            const double next = bps[i + 1].rate.value();
            if (bps[i].mode == SegmentMode::linear && next < rate)
                extend_run(t, rate, bps[i + 1].time.value(), i + 1);
            else
                close_run();
        }
    }
    close_run();
    return events;
}

std::string_view to_string(SegmentMode mode)
{
    return mode == SegmentMode::hold ? "hold" : "linear";
}

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

double parse_number(std::string_view token, std::size_t line, const char* field)
{
    token = trim(token);
    if (!token.empty() && token.front() == '+')
        token.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v))
        throw ParseError(line, std::string("malformed ") + field + " '" + std::string(token) + "'");
    return v;
}

} // namespace

CapacityTrace trace_from_csv(std::string_view text, std::optional<Seconds> horizon)
{
    std::vector<Breakpoint> rows;
    std::size_t line_no = 0;
    std::size_t last_line = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;

        line = trim(line);
        if (line.empty())
            continue;
        if (line_no == 1 && line.starts_with("time_s")) {
            if (line != "time_s,rate_bps,mode")
                throw ParseError(line_no, "unexpected header '" + std::string(line) + "'");
            continue;
        }

        if (std::count(line.begin(), line.end(), ',') != 2)
            throw ParseError(line_no, "expected 3 fields");
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const std::string_view fields[3] = {line.substr(0, c1), line.substr(c1 + 1, c2 - c1 - 1),
                                            line.substr(c2 + 1)};

        const double t = parse_number(fields[0], line_no, "time");
        const double r = parse_number(fields[1], line_no, "rate");
        const auto mode_token = trim(fields[2]);
        SegmentMode mode;
        if (mode_token == "hold")
            mode = SegmentMode::hold;
        else if (mode_token == "linear")
            mode = SegmentMode::linear;
        else
            throw ParseError(line_no, "unknown mode '" + std::string(mode_token) + "'");

        if (rows.empty() && t != 0.0)
            throw ParseError(line_no, "first row must be at time 0");
        if (t < 0.0)
            throw ParseError(line_no, "time must be >= 0");
        if (!rows.empty() && !(t > rows.back().time.value()))
            throw ParseError(line_no, "times must be strictly increasing");
        if (r <= 0.0)
            throw ParseError(line_no, "rate must be positive");

        rows.push_back({Seconds(t), BitsPerSecond(r), mode});
        last_line = line_no;
    }
    if (rows.empty())
        throw ParseError(0, "trace has no rows");

    const Seconds h = horizon.value_or(rows.back().time);
    if (h < rows.back().time)
        throw ParseError(last_line, "row beyond horizon " + format_number(h.value()) + " s");
    if (h.value() <= 0.0)
        throw ParseError(last_line, "horizon must be > 0");
    try {
        return CapacityTrace(std::move(rows), h);
    } catch (const InvalidArgument& e) {
        throw ParseError(last_line, e.what());
    }
}

std::string trace_to_csv(const CapacityTrace& trace)
{
    std::string out = "time_s,rate_bps,mode\n";
    for (const auto& b : trace.breakpoints()) {
        out += format_number(b.time.value());
        out += ',';
        out += format_number(b.rate.value());
        out += ',';
        out += to_string(b.mode);
        out += '\n';
    }
    return out;
}

} // namespace tqd
