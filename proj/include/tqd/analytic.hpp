#pragma once

#include <string>
#include <vector>

#include "tqd/units.hpp"

namespace tqd {

// Closed-form peak transient queuing delay for an ideal end-to-end
// controller: the bottleneck emits a signal carrying the new capacity the
// instant capacity drops, the sender hears it after `signal_delay` and
// matches the new capacity exactly. Delays are expressed in time-to-drain at
// the post-reduction capacity.

struct StepBoundInput {
    double c_factor;      // pre_rate / post_rate, >= 1
    Seconds signal_delay; // bottleneck to sender
};

struct RampBoundInput {
    double c_factor;
    Seconds signal_delay;
    Seconds ramp_duration; // capacity falls linearly over this interval
};

enum class RampBranch {
    short_ramp, // ramp_duration <= signal_delay: (C-1)(2d - d_ramp)/2
    long_ramp,  // ramp_duration >  signal_delay: (C-1)d^2 / (2 d_ramp)
};

double reduction_factor(BitsPerSecond pre_rate, BitsPerSecond post_rate);

// (C - 1) * d. Independent of the absolute rates.
Seconds peak_delay_step(const StepBoundInput& input);

Seconds peak_delay_ramp(const RampBoundInput& input);
RampBranch ramp_branch(const RampBoundInput& input);

// The ramp duration at which peak_delay_ramp equals target_q. Requires
// 0 < target_q <= (C - 1) * d.
Seconds ramp_duration_for_target(double c_factor, Seconds signal_delay, Seconds target_q);

std::string_view to_string(RampBranch branch);

// Grid of closed-form evaluations. For step grids `axis` holds signal delays
// and `fixed_delay` is unused; for ramp grids `axis` holds ramp durations at
// the fixed signal delay. results[i][j] belongs to (c_values[i], axis[j]).
struct SweepGrid {
    enum class Kind { step, ramp };

    Kind kind;
    std::vector<double> c_values;
    std::vector<Seconds> axis;
    Seconds fixed_delay;
    std::vector<std::vector<Seconds>> results;
};

SweepGrid sweep_step(std::vector<double> c_values, std::vector<Seconds> delays);
SweepGrid sweep_ramp(std::vector<double> c_values, std::vector<Seconds> ramp_durations,
                     Seconds signal_delay);

// Long form, one row per cell: c,d,d_ramp,q_seconds (all seconds).
std::string sweep_to_csv(const SweepGrid& grid);
std::string sweep_to_json(const SweepGrid& grid);

} // namespace tqd
