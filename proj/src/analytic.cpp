#include "tqd/analytic.hpp"

#include "json.hpp"

#include "tqd/format.hpp"

namespace tqd {

namespace {

void check_c_factor(double c)
{
    if (!std::isfinite(c) || c < 1.0)
        throw InvalidArgument("reduction factor C must be finite and >= 1, got " + format_number(c));
}

} // namespace

double reduction_factor(BitsPerSecond pre_rate, BitsPerSecond post_rate)
{
    return pre_rate.value() / post_rate.value();
}

Seconds peak_delay_step(const StepBoundInput& input)
{
    check_c_factor(input.c_factor);
    return Seconds((input.c_factor - 1.0) * input.signal_delay.value());
}

RampBranch ramp_branch(const RampBoundInput& input)
{
    return input.ramp_duration <= input.signal_delay ? RampBranch::short_ramp : RampBranch::long_ramp;
}

Seconds peak_delay_ramp(const RampBoundInput& input)
{
    check_c_factor(input.c_factor);
    const double c1 = input.c_factor - 1.0;
    const double d = input.signal_delay.value();
    const double ramp = input.ramp_duration.value();
    if (ramp_branch(input) == RampBranch::short_ramp)
        return Seconds(c1 * (2.0 * d - ramp) / 2.0);
    // ramp > d >= 0 here, so the division is safe.
    return Seconds(c1 * d * d / (2.0 * ramp));
}

Seconds ramp_duration_for_target(double c_factor, Seconds signal_delay, Seconds target_q)
{
    check_c_factor(c_factor);
    const double q = target_q.value();
    const double c1 = c_factor - 1.0;
    const double d = signal_delay.value();
    const double step = c1 * d;
    if (q <= 0.0)
        throw InvalidArgument("target delay must be > 0");
    if (q > step)
        throw InvalidArgument("target delay " + format_number(q) + " s exceeds the step bound "
                              + format_number(step) + " s");
    if (q == step)
        return Seconds(0.0);
    if (q >= step / 2.0)
        return Seconds(std::max(0.0, 2.0 * d - 2.0 * q / c1));
    return Seconds(c1 * d * d / (2.0 * q));
}

std::string_view to_string(RampBranch branch)
{
    return branch == RampBranch::short_ramp ? "short_ramp" : "long_ramp";
}

SweepGrid sweep_step(std::vector<double> c_values, std::vector<Seconds> delays)
{
    if (c_values.empty() || delays.empty())
        throw InvalidArgument("sweep axes must be non-empty");
    SweepGrid grid{SweepGrid::Kind::step, std::move(c_values), std::move(delays), Seconds(0.0), {}};
    for (double c : grid.c_values) {
        auto& row = grid.results.emplace_back();
        for (Seconds d : grid.axis)
            row.push_back(peak_delay_step({c, d}));
    }
    return grid;
}

SweepGrid sweep_ramp(std::vector<double> c_values, std::vector<Seconds> ramp_durations,
                     Seconds signal_delay)
{
    if (c_values.empty() || ramp_durations.empty())
        throw InvalidArgument("sweep axes must be non-empty");
    SweepGrid grid{SweepGrid::Kind::ramp, std::move(c_values), std::move(ramp_durations),
                   signal_delay, {}};
    for (double c : grid.c_values) {
        auto& row = grid.results.emplace_back();
        for (Seconds ramp : grid.axis)
            row.push_back(peak_delay_ramp({c, signal_delay, ramp}));
    }
    return grid;
}

namespace {

template <typename Fn>
void for_each_cell(const SweepGrid& grid, Fn&& fn)
{
    for (std::size_t i = 0; i < grid.c_values.size(); ++i)
        for (std::size_t j = 0; j < grid.axis.size(); ++j) {
            const bool step = grid.kind == SweepGrid::Kind::step;
            const double d = step ? grid.axis[j].value() : grid.fixed_delay.value();
            const double ramp = step ? 0.0 : grid.axis[j].value();
            fn(grid.c_values[i], d, ramp, grid.results[i][j].value());
        }
}

} // namespace

std::string sweep_to_csv(const SweepGrid& grid)
{
    std::string out = "c,d,d_ramp,q_seconds\n";
    for_each_cell(grid, [&](double c, double d, double ramp, double q) {
        out += format_number(c) + ',' + format_number(d) + ',' + format_number(ramp) + ','
               + format_number(q) + '\n';
    });
    return out;
}

std::string sweep_to_json(const SweepGrid& grid)
{
    nlohmann::json cells = nlohmann::json::array();
    for_each_cell(grid, [&](double c, double d, double ramp, double q) {
        cells.push_back({{"c", c}, {"d", d}, {"d_ramp", ramp}, {"q_seconds", q}});
    });
    nlohmann::json j{{"kind", grid.kind == SweepGrid::Kind::step ? "step" : "ramp"},
                     {"units", {{"d", "s"}, {"d_ramp", "s"}, {"q_seconds", "s"}}},
                     {"cells", cells}};
    return j.dump(2);
}

} // namespace tqd
