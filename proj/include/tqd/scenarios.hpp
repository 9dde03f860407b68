#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tqd/trace.hpp"

namespace tqd {

struct WifiRateRow {
    std::string technology;
    std::string note;
    BitsPerSecond rate;
};

struct PathDelayRow {
    std::string label;
    Seconds one_way_delay;
    Seconds q_at_c10;        // peak_delay_step(C = 10, one_way_delay)
    bool lower_bound = false; // measured delay is a lower bound, so is q
};

// Capacity levels for several WiFi generations.
std::vector<WifiRateRow> wifi_rates();

// Dublin to New York one-way delays and the step bound at C = 10.
std::vector<PathDelayRow> dublin_ny_table();

struct ScenarioInfo {
    std::string name;
    std::string description;
};

std::vector<ScenarioInfo> scenario_registry();

// Unset fields take the scenario's defaults: onset 1 s, horizon 5 s,
// dwell 1 s between wifi-mcs-walk levels.
struct ScenarioParams {
    std::optional<BitsPerSecond> pre_rate;
    std::optional<BitsPerSecond> post_rate;
    std::optional<double> c_factor;
    std::optional<Seconds> ramp_duration;
    std::optional<std::vector<BitsPerSecond>> rates;
    std::optional<Seconds> dwell;
    std::optional<Seconds> onset;
    std::optional<Seconds> horizon;
};

// wifi-step       step between two WiFi 4 (20 MHz, 2x2) levels (144.4 -> 14.4 Mbit/s)
// wifi-mcs-walk   hold each rate in `rates` for `dwell`, starting the walk at onset
// ramp-contention linear drop by c_factor over ramp_duration
CapacityTrace scenario_trace(const std::string& name, const ScenarioParams& params = {});

} // namespace tqd
