#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tqd/piecewise.hpp"
#include "tqd/units.hpp"

namespace tqd {

enum class SegmentMode { hold, linear };

// `mode` describes the segment that starts at this breakpoint: `hold` keeps
// `rate` until the next breakpoint, `linear` interpolates to the next rate.
struct Breakpoint {
    Seconds time;
    BitsPerSecond rate;
    SegmentMode mode = SegmentMode::hold;

    bool operator==(const Breakpoint&) const = default;
};

// Bottleneck capacity over [0, horizon].
//
// Canonical form: the final breakpoint sits at the horizon and has mode
// `hold`. The constructor appends it (holding the last rate) when the input
// stops short of the horizon.
class CapacityTrace {
public:
    CapacityTrace(std::vector<Breakpoint> breakpoints, Seconds horizon);

    const std::vector<Breakpoint>& breakpoints() const noexcept { return breakpoints_; }
    Seconds horizon() const noexcept { return horizon_; }

    BitsPerSecond capacity_at(Seconds t) const;
    Bits integrate(Seconds t0, Seconds t1) const;
    double min_rate() const;

    // The same function as a list of linear pieces.
    const RateFunction& rate_function() const noexcept { return function_; }

    bool operator==(const CapacityTrace& other) const
    {
        return breakpoints_ == other.breakpoints_ && horizon_ == other.horizon_;
    }

private:
    std::vector<Breakpoint> breakpoints_;
    Seconds horizon_;
    RateFunction function_;
};

// One capacity reduction: capacity falls from pre_rate (left limit at onset)
// to post_rate over ramp_duration. A zero ramp is an instantaneous step.
struct CapacityEvent {
    Seconds onset;
    BitsPerSecond pre_rate;
    BitsPerSecond post_rate;
    Seconds ramp_duration;

    double c_factor() const noexcept { return pre_rate.value() / post_rate.value(); }
    Seconds end() const { return Seconds(onset.value() + ramp_duration.value()); }
};

CapacityTrace make_step_trace(BitsPerSecond pre_rate, BitsPerSecond post_rate, Seconds onset,
                              Seconds horizon);

CapacityTrace make_ramp_trace(BitsPerSecond pre_rate, BitsPerSecond post_rate, Seconds onset,
                              Seconds ramp_duration, Seconds horizon);

BitsPerSecond capacity_at(const CapacityTrace& trace, Seconds t);
Bits integrate_capacity(const CapacityTrace& trace, Seconds t0, Seconds t1);

// One event per maximal run of decreasing capacity (downward jumps and
// decreasing linear segments that touch). Increases never produce events.
std::vector<CapacityEvent> detect_events(const CapacityTrace& trace);

// Rows `time_s,rate_bps,mode`, optional header line `time_s,rate_bps,mode`.
// Without an explicit horizon the final row's time is the horizon.
CapacityTrace trace_from_csv(std::string_view text, std::optional<Seconds> horizon = std::nullopt);
std::string trace_to_csv(const CapacityTrace& trace);

std::string_view to_string(SegmentMode mode);

} // namespace tqd
