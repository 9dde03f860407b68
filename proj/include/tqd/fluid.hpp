#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tqd/piecewise.hpp"
#include "tqd/trace.hpp"

namespace tqd {

// Sender-rate policy driving the fluid bottleneck.
//
//  oracle_final     The drop onset emits a signal carrying the event's final
//                   capacity; the sender switches to it signal_delay later.
//                   Outside events the sender follows capacity with the same
//                   delay.
//  oracle_tracking  Sender rate is the capacity signal_delay seconds ago.
//  fixed_rate       Constant sender rate.
struct ControllerSpec {
    enum class Kind { oracle_final, oracle_tracking, fixed_rate };

    Kind kind = Kind::oracle_final;
    Seconds signal_delay;
    double rate = 0.0; // bits/s, fixed_rate only

    static ControllerSpec oracle_final(Seconds d) { return {Kind::oracle_final, d, 0.0}; }
    static ControllerSpec oracle_tracking(Seconds d) { return {Kind::oracle_tracking, d, 0.0}; }
    static ControllerSpec fixed(BitsPerSecond r) { return {Kind::fixed_rate, Seconds(0.0), r.value()}; }
};

struct SimConfig {
    CapacityTrace trace;
    ControllerSpec controller;
    Seconds horizon;
};

// b(t) = b0 + slope * (t - t0) + curvature * (t - t0)^2 on [t0, t1].
struct BacklogSegment {
    double t0;
    double t1;
    double b0;
    double slope;
    double curvature;

    double at(double t) const noexcept
    {
        const double tau = t - t0;
        return b0 + slope * tau + curvature * tau * tau;
    }
    double end_value() const noexcept { return at(t1); }
};

struct FluidResult {
    std::vector<BacklogSegment> backlog_segments;
    Bits peak_backlog;
    Seconds peak_time; // first time the peak is reached
    // peak_backlog divided by normalization_rate: the post-rate of the last
    // event starting at or before peak_time (or the capacity at peak_time if
    // there is none).
    Seconds peak_delay_final_norm;
    double normalization_rate = 0.0;
    // Largest FIFO virtual delay over arrival times in [0, fifo_domain_end];
    // later arrivals do not drain before the horizon.
    Seconds peak_fifo_delay;
    Seconds fifo_domain_end;
    RateFunction sender_rate;
    RateFunction capacity;
    Bits bits_in;  // integral of sender rate
    Bits bits_out; // integral of service rate
    Seconds horizon;

    double backlog_at(double t) const;
    double final_backlog() const { return backlog_segments.back().end_value(); }
};

// Throws InvalidArgument for a horizon beyond the trace and ModelViolation
// for oracle_final traces whose signal windows [onset, onset + d) overlap.
RateFunction sender_rate_function(const SimConfig& config);
BitsPerSecond sender_rate(const SimConfig& config, Seconds t);

// Exact piecewise-quadratic solution of b' = sender - service with
// service = capacity while b > 0 and min(sender, capacity) at b = 0.
FluidResult simulate_fluid(const SimConfig& config);

// Time until the backlog present at t is served; nullopt when it cannot be
// served before the horizon.
std::optional<Seconds> fifo_delay_at(const FluidResult& result, const CapacityTrace& trace, Seconds t);

struct FluidSample {
    double t;
    double backlog_bits;
    double delay_final_norm;
    std::optional<double> fifo_delay;
};

std::vector<FluidSample> sample_result(const FluidResult& result, Seconds step);

std::string fluid_result_to_json(const FluidResult& result);
// Columns t_s,backlog_bits,delay_final_norm_s,fifo_delay_s; fifo_delay_s is
// NA past the drainable domain.
std::string samples_to_csv(const std::vector<FluidSample>& samples);

} // namespace tqd
