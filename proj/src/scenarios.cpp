#include "tqd/scenarios.hpp"

#include "tqd/analytic.hpp"

namespace tqd {

namespace {

constexpr double mbit = 1e6;
constexpr double table2_c = 10.0;

BitsPerSecond mbps(double v) { return BitsPerSecond(v * mbit); }

} // namespace

std::vector<WifiRateRow> wifi_rates()
{
    return {
        {"WiFi 802.11b", "Min rate", mbps(1.0)},
        {"WiFi 802.11b", "Max rate", mbps(11.0)},
        {"WiFi 4 (20MHz, 2x2)", "Min rate", mbps(14.4)},
        {"WiFi 4 (20MHz, 2x2)", "Max rate", mbps(144.4)},
        {"WiFi 5 (20MHz, 2x2)", "Max rate", mbps(173.3)},
        {"WiFi 5 (40MHz, 2x2)", "Max rate", mbps(400.0)},
        {"WiFi 5 (80MHz, 2x2)", "Max rate", mbps(866.7)},
    };
}

std::vector<PathDelayRow> dublin_ny_table()
{
    struct Source {
        const char* label;
        double delay_ms;
        bool lower_bound;
    };
    static constexpr Source sources[] = {
        {"Speed of light", 17.0, false},
        {"Theoretically Optimal LEO Satellite", 20.07, false},
        {"Theoretical Optical Terrestrial Cable", 25.07, false},
        {"Internet measurements", 38.5, true},
    };
    std::vector<PathDelayRow> rows;
    for (const auto& s : sources) {
        const Seconds d(s.delay_ms / 1000.0);
        rows.push_back({s.label, d, peak_delay_step({table2_c, d}), s.lower_bound});
    }
    return rows;
}

std::vector<ScenarioInfo> scenario_registry()
{
    return {
        {"wifi-step", "step drop between WiFi 4 (20MHz, 2x2) max and min rates, C ~ 10.03"},
        {"wifi-mcs-walk", "sequence of held MCS rates, one event per reduction"},
        {"ramp-contention", "linear capacity drop by C over d_ramp from competing traffic"},
    };
}

CapacityTrace scenario_trace(const std::string& name, const ScenarioParams& p)
{
    const Seconds onset = p.onset.value_or(Seconds(1.0));
    const Seconds horizon = p.horizon.value_or(Seconds(5.0));

    if (name == "wifi-step") {
        const BitsPerSecond pre = p.pre_rate.value_or(mbps(144.4));
        const BitsPerSecond post = p.post_rate.value_or(mbps(14.4));
        return make_step_trace(pre, post, onset, horizon);
    }
    if (name == "wifi-mcs-walk") {
        const auto rates = p.rates.value_or(std::vector{mbps(866.7), mbps(144.4), mbps(14.4)});
        const Seconds dwell = p.dwell.value_or(Seconds(1.0));
        if (rates.empty())
            throw InvalidArgument("wifi-mcs-walk needs at least one rate");
        if (dwell.value() <= 0.0)
            throw InvalidArgument("wifi-mcs-walk dwell must be > 0");
        std::vector<Breakpoint> bps{{Seconds(0.0), rates.front(), SegmentMode::hold}};
        for (std::size_t i = 1; i < rates.size(); ++i)
            bps.push_back({Seconds(onset.value() + static_cast<double>(i - 1) * dwell.value()), rates[i],
                           SegmentMode::hold});
        return CapacityTrace(std::move(bps), horizon);
    }
    if (name == "ramp-contention") {
        const BitsPerSecond pre = p.pre_rate.value_or(mbps(144.4));
        const double c = p.c_factor.value_or(table2_c);
        if (!(c > 1.0))
            throw InvalidArgument("ramp-contention needs C > 1");
        const BitsPerSecond post(pre.value() / c);
        const Seconds ramp = p.ramp_duration.value_or(Seconds(0.2));
        return make_ramp_trace(pre, post, onset, ramp, horizon);
    }
    throw InvalidArgument("unknown scenario '" + name + "'");
}

} // namespace tqd
