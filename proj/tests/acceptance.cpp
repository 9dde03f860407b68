// Acceptance suite: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "tqd/analytic.hpp"
#include "tqd/baseline.hpp"
#include "tqd/fluid.hpp"
#include "tqd/scenarios.hpp"

using namespace tqd;

namespace {

double rel(double a, double b) { return std::fabs(a - b) / std::max(std::fabs(b), 1e-300); }

struct Check {
    bool ok = true;
    std::string why;

    void expect(bool cond, const std::string& msg)
    {
        if (!cond && ok) {
            ok = false;
            why = msg;
        }
    }
};

std::string cli(const std::vector<std::string>& args, int& code)
{
    std::ostringstream out, err;
    code = cli::run(args, out, err);
    return out.str();
}

// Rows of the CSV body, split on commas. Comment lines and the header are skipped.
std::vector<std::vector<std::string>> csv_body(const std::string& text)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        if (!header) {
            header = true;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

const std::vector<double> c_grid{1.1, 2, 3, 5, 10, 20, 50, 100};
const std::vector<double> d_grid_ms{1, 5, 17, 50, 100, 200};

double fluid_peak(double c, double d, double ramp)
{
    const double post = 10e6, onset = 0.5;
    const Seconds horizon(onset + ramp + d + 0.2);
    const auto trace = make_ramp_trace(BitsPerSecond(c * post), BitsPerSecond(post), Seconds(onset), Seconds(ramp),
                                       horizon);
    return simulate_fluid({trace, ControllerSpec::oracle_final(Seconds(d)), horizon}).peak_delay_final_norm.value();
}

Check table2()
{
    Check k;
    int code = 0;
    const auto rows = csv_body(cli({"scenario", "--table", "dublin-ny"}, code));
    k.expect(code == 0, "exit code");
    const double d_ms[] = {17, 20.07, 25.07, 38.5};
    const double q_ms[] = {153, 180.63, 225.63, 346.5};
    k.expect(rows.size() == 4, "row count");
    for (std::size_t i = 0; i < rows.size() && i < 4; ++i) {
        k.expect(std::fabs(std::stod(rows[i][1]) - d_ms[i]) < 1e-9, "d column row " + std::to_string(i));
        k.expect(std::fabs(std::stod(rows[i][2]) - q_ms[i]) <= 0.01, "q column row " + std::to_string(i));
    }
    return k;
}

Check step_grid()
{
    Check k;
    for (double c : c_grid)
        for (double d_ms : d_grid_ms) {
            const double d = d_ms / 1000.0;
            const double q = peak_delay_step({c, Seconds(d)}).value();
            const double sim = fluid_peak(c, d, 0.0);
            k.expect(rel(sim, q) <= 1e-9 && rel(q, (c - 1.0) * d) <= 1e-12,
                     "C=" + std::to_string(c) + " d=" + std::to_string(d_ms));
        }
    return k;
}

Check ramp_grid()
{
    Check k;
    bool saw_short = false, saw_long = false;
    for (double c : c_grid)
        for (double d_ms : d_grid_ms) {
            const double d = d_ms / 1000.0;
            for (double f : {0.25, 0.5, 1.0, 2.0, 8.0}) {
                const double ramp = f * d;
                const RampBoundInput in{c, Seconds(d), Seconds(ramp)};
                const double q = peak_delay_ramp(in).value();
                const double expect = ramp <= d ? (c - 1.0) * (2 * d - ramp) / 2 : (c - 1.0) * d * d / (2 * ramp);
                (ramp_branch(in) == RampBranch::short_ramp ? saw_short : saw_long) = true;
                k.expect(rel(q, expect) <= 1e-12, "closed form");
                k.expect(rel(fluid_peak(c, d, ramp), q) <= 1e-9,
                         "C=" + std::to_string(c) + " d=" + std::to_string(d_ms) + " ramp=" + std::to_string(f) + "d");
            }
            // both branches meet at d_ramp = d
            const double left = (c - 1.0) * (2 * d - d) / 2, right = (c - 1.0) * d * d / (2 * d);
            k.expect(std::fabs(left - right) <= 1e-12 * std::max(1.0, right), "branch continuity");
            k.expect(std::fabs(peak_delay_ramp({c, Seconds(d), Seconds(d)}).value() - right) <= 1e-12,
                     "value at d_ramp = d");
        }
    k.expect(saw_short && saw_long, "both branches exercised");
    return k;
}

Check half_and_quarter()
{
    Check k;
    k.expect(rel(fluid_peak(10, 0.1, 0.1), 0.45) <= 1e-9, "d_ramp = 100 ms");
    k.expect(rel(fluid_peak(10, 0.1, 0.2), 0.225) <= 1e-9, "d_ramp = 200 ms");
    k.expect(rel(fluid_peak(10, 0.1, 0.0), 0.9) <= 1e-9, "step reference");
    return k;
}

// Independent midpoint integration of b' = c(t - d) - c(t), 1 us steps, in
// units of the final rate.
double tracking_numeric(double c, double d, double ramp, double onset)
{
    auto cap = [&](double t) {
        if (t < onset)
            return c;
        if (t < onset + ramp)
            return c - (c - 1.0) * (t - onset) / ramp;
        return 1.0;
    };
    const double h = 1e-6, end = onset + ramp + d + 0.01;
    double b = 0.0, peak = 0.0;
    for (long i = 0; (i + 0.5) * h < end; ++i) {
        const double t = (i + 0.5) * h;
        const double send = t < d ? cap(0.0) : cap(t - d);
        b = std::max(0.0, b + (send - cap(t)) * h);
        peak = std::max(peak, b);
    }
    return peak;
}

Check tracking()
{
    Check k;
    const double c = 10, d = 0.05, post = 10e6, onset = 0.5;
    for (double ramp : {0.05, 0.1, 0.4}) {
        const Seconds horizon(onset + ramp + d + 0.2);
        const auto trace = make_ramp_trace(BitsPerSecond(c * post), BitsPerSecond(post), Seconds(onset),
                                           Seconds(ramp), horizon);
        const auto r = simulate_fluid({trace, ControllerSpec::oracle_tracking(Seconds(d)), horizon});
        const double sim = r.peak_delay_final_norm.value();
        const double oracle = tracking_numeric(c, d, ramp, onset);
        k.expect(rel(sim, 0.45) <= 1e-9, "closed value at ramp " + std::to_string(ramp));
        k.expect(rel(sim, oracle) <= 1e-6, "numeric oracle at ramp " + std::to_string(ramp));
    }
    return k;
}

Check dominance()
{
    Check k;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> c_dist(2.0, 20.0), d_dist(5e-3, 50e-3), f_dist(0.0, 20e-3),
        t_dist(5e6, 50e6), on_dist(1.0, 1.5);
    int violations = 0;
    for (int i = 0; i < 120; ++i) {
        const double c = c_dist(rng), d = d_dist(rng), fwd = f_dist(rng), post = t_dist(rng), onset = on_dist(rng);
        const double horizon = onset + 2.0 * (c - 1.0) * (d + fwd) + 0.5;
        const auto trace = make_step_trace(BitsPerSecond(c * post), BitsPerSecond(post), Seconds(onset),
                                           Seconds(horizon));
        auto cfg = default_packet_config(trace, Seconds(fwd), Seconds(d / 2), Seconds(d / 2));
        cfg.seed = static_cast<std::uint64_t>(i) + 1;
        const auto r = simulate_packets(cfg);
        k.expect(r.status == PacketSimResult::Status::ok, "run " + std::to_string(i) + " never congested");
        const Seconds serialization(cfg.packet_size.value() / post);
        const auto cmp = compare_to_bound(r, detect_events(trace).at(0), cfg.signal_delay(), serialization);
        if (cmp.violation)
            ++violations;
    }
    k.expect(violations == 0, std::to_string(violations) + " violations");
    return k;
}

Check figures()
{
    Check k;
    int code = 0;
    const auto fig7 = csv_body(cli({"sweep", "--fig7"}, code));
    k.expect(code == 0 && !fig7.empty(), "fig7 ran");
    double prev_c = -1, prev_q = 0;
    for (const auto& row : fig7) {
        const double c = std::stod(row[0]), d = std::stod(row[1]), ramp = std::stod(row[2]), q = std::stod(row[3]);
        if (c != prev_c) {
            k.expect(ramp == 0.0 && std::fabs(q - (c - 1.0) * d) <= 1e-9, "fig7 start value");
        } else {
            k.expect(q <= prev_q, "fig7 monotone");
        }
        prev_c = c;
        prev_q = q;
    }
    for (double c : {2.0, 5.0, 10.0}) {
        const double at = peak_delay_ramp({c, Seconds(0.1), Seconds(0.1)}).value();
        const double below = peak_delay_ramp({c, Seconds(0.1), Seconds(0.1 - 1e-9)}).value();
        const double above = peak_delay_ramp({c, Seconds(0.1), Seconds(0.1 + 1e-9)}).value();
        k.expect(std::fabs(below - at) < 1e-8 && std::fabs(above - at) < 1e-8, "fig7 continuity");
    }
    const auto fig5 = csv_body(cli({"sweep", "--fig5"}, code));
    k.expect(code == 0 && !fig5.empty(), "fig5 ran");
    int big = 0;
    for (const auto& row : fig5)
        if (std::stod(row[0]) <= 10 && std::stod(row[1]) <= 100 && std::stod(row[3]) > 300)
            ++big;
    k.expect(big > 0, "fig5 has cells above 300 ms");
    return k;
}

Check conservation_determinism()
{
    Check k;
    for (const auto& s : scenario_registry()) {
        const auto trace = scenario_trace(s.name);
        for (const auto& ctl : {ControllerSpec::oracle_final(Seconds(0.017)), ControllerSpec::oracle_tracking(Seconds(0.017)),
                                ControllerSpec::fixed(BitsPerSecond(100e6))}) {
            const auto r = simulate_fluid({trace, ctl, trace.horizon()});
            const double lhs = r.bits_in.value() - r.bits_out.value();
            k.expect(std::fabs(lhs - r.final_backlog()) <= 1e-9 * std::max(1.0, r.bits_in.value()),
                     "conservation on " + s.name);
        }
        k.expect(trace_from_csv(trace_to_csv(trace)) == trace, "round trip " + s.name);

        auto cfg = default_packet_config(trace, Seconds(0.001), Seconds(0.0085), Seconds(0.0085));
        const auto a = event_log_to_csv(simulate_packets(cfg));
        const auto b = event_log_to_csv(simulate_packets(cfg));
        k.expect(a == b && !a.empty(), "determinism " + s.name);
    }
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> gap(1e-3, 1.0), rate(1.0, 1e10);
    for (int i = 0; i < 200; ++i) {
        std::vector<Breakpoint> bps;
        double t = 0.0;
        for (int j = 0; j < 6; ++j) {
            bps.push_back({Seconds(t), BitsPerSecond(rate(rng)), (j % 2 && j < 5) ? SegmentMode::linear : SegmentMode::hold});
            t += gap(rng);
        }
        const CapacityTrace tr(bps, Seconds(t));
        k.expect(trace_from_csv(trace_to_csv(tr)) == tr, "random round trip");
    }
    return k;
}

} // namespace

int main()
{
    struct Criterion {
        const char* name;
        std::function<Check()> run;
        double budget_s;
    };
    const std::vector<Criterion> criteria{
        {"path delay table at C = 10 within 0.01 ms", table2, 1.0},
        {"fluid step peaks match the closed form to 1e-9", step_grid, 5.0},
        {"fluid ramp peaks match the closed form to 1e-9", ramp_grid, 10.0},
        {"ramps of d and 2d halve and quarter the step peak", half_and_quarter, 0.0},
        {"tracking sender on ramps peaks at (C - 1) d", tracking, 0.0},
        {"randomized AIMD runs never undercut the bound", dominance, 60.0},
        {"sweep presets: monotone, anchored, continuous, large cells", figures, 0.0},
        {"conservation, determinism and CSV round trip", conservation_determinism, 0.0},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Check k;
        try {
            k = criteria[i].run();
        } catch (const std::exception& e) {
            k.ok = false;
            k.why = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (criteria[i].budget_s > 0 && secs > criteria[i].budget_s)
            k.expect(false, "over time budget");
        std::printf("%s %zu %s (%.3f s)%s%s\n", k.ok ? "PASS" : "FAIL", i + 1, criteria[i].name, secs,
                    k.ok ? "" : ": ", k.why.c_str());
        if (!k.ok)
            ++failed;
    }
    return failed == 0 ? 0 : 1;
}
