#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tqd/analytic.hpp"
#include "tqd/baseline.hpp"
#include "tqd/fluid.hpp"
#include "tqd/format.hpp"
#include "tqd/scenarios.hpp"

namespace tqd::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

// Boundary units: milliseconds and Mbit/s outside, seconds and bit/s inside.
Seconds from_ms(double ms) { return Seconds(ms / 1000.0); }
BitsPerSecond from_mbps(double mbps) { return BitsPerSecond(mbps * 1e6); }

double to_ms(double seconds)
{
    // Drop binary noise such as 153.00000000000003.
    return std::round(seconds * 1000.0 * 1e9) / 1e9;
}
double to_mbps(double bps) { return std::round(bps / 1e6 * 1e9) / 1e9; }

std::string ms_text(double seconds) { return format_number(to_ms(seconds)); }

struct CommonFlags {
    std::string format = "csv";
    std::string out_path;
    bool debug_units = false;
};

void add_common(CLI::App* cmd, CommonFlags& f)
{
    cmd->add_option("--format", f.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--out", f.out_path, "Write output to this file instead of stdout");
    cmd->add_flag("--debug-units", f.debug_units, "Echo internal SI values on stderr");
}

// Metadata shared by every envelope.
struct Envelope {
    std::string command;
    ordered_json params = ordered_json::object();
    ordered_json units = ordered_json::object();
};

std::string csv_preamble(const Envelope& env, const std::vector<std::string>& extra = {})
{
    std::string s = "# tqd " + std::string(version) + "\n# command: " + env.command + "\n# units:";
    for (const auto& [k, v] : env.units.items())
        s += " " + k + "=" + v.get<std::string>();
    s += '\n';
    for (const auto& line : extra)
        s += "# " + line + '\n';
    return s;
}

ordered_json json_envelope(const Envelope& env, ordered_json results)
{
    return ordered_json{{"command", env.command},
                        {"params", env.params},
                        {"results", std::move(results)},
                        {"units", env.units},
                        {"version", version}};
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"')
            q += '"';
        q += ch;
    }
    return q + '"';
}

class Output {
public:
    Output(const CommonFlags& flags, std::ostream& fallback) : flags_(flags), out_(fallback) {}

    void write(const std::string& text)
    {
        if (flags_.out_path.empty()) {
            out_ << text;
            return;
        }
        std::ofstream f(flags_.out_path, std::ios::binary);
        if (!f)
            throw InvalidArgument("cannot open output file '" + flags_.out_path + "'");
        f << text;
    }

private:
    const CommonFlags& flags_;
    std::ostream& out_;
};

std::string read_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw ParseError(0, "cannot read '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------- bound

struct BoundFlags {
    CommonFlags common;
    std::optional<double> c_factor;
    std::optional<double> pre_mbps;
    std::optional<double> post_mbps;
    double delay_ms = 0.0;
    std::optional<double> ramp_ms;
};

int cmd_bound(const BoundFlags& f, const Envelope& base, std::ostream& out, std::ostream& err)
{
    double c;
    if (f.c_factor) {
        c = *f.c_factor;
    } else {
        if (!f.pre_mbps || !f.post_mbps)
            throw InvalidArgument("bound needs --c-factor or both --pre-rate and --post-rate");
        c = reduction_factor(from_mbps(*f.pre_mbps), from_mbps(*f.post_mbps));
    }
    const Seconds d = from_ms(f.delay_ms);
    Seconds q;
    std::string branch = "step";
    if (f.ramp_ms) {
        const RampBoundInput in{c, d, from_ms(*f.ramp_ms)};
        q = peak_delay_ramp(in);
        branch = std::string(to_string(ramp_branch(in)));
    } else {
        q = peak_delay_step({c, d});
    }
    if (f.common.debug_units) {
        err << "debug: c_factor=" << format_number(c) << "\n";
        err << "debug: signal_delay_s=" << format_number(d.value()) << "\n";
        if (f.ramp_ms)
            err << "debug: ramp_duration_s=" << format_number(from_ms(*f.ramp_ms).value()) << "\n";
        err << "debug: q_s=" << format_number(q.value()) << "\n";
    }

    Envelope env = base;
    env.params = {{"c_factor", c}, {"delay_ms", f.delay_ms}};
    if (f.ramp_ms)
        env.params["ramp_ms"] = *f.ramp_ms;
    env.units = {{"delay_ms", "ms"}, {"ramp_ms", "ms"}, {"q_ms", "ms"}};

    Output o(f.common, out);
    if (f.common.format == "json") {
        o.write(json_envelope(env, {{"q_ms", to_ms(q.value())}, {"branch", branch}}).dump(2) + "\n");
    } else {
        o.write(csv_preamble(env) + "c_factor,delay_ms,ramp_ms,branch,q_ms\n" + format_number(c) + ','
                + format_number(f.delay_ms) + ',' + (f.ramp_ms ? format_number(*f.ramp_ms) : "") + ','
                + branch + ',' + ms_text(q.value()) + '\n');
    }
    return exit_ok;
}

// ---------------------------------------------------------------- scenario params

struct ScenarioFlags {
    std::optional<double> pre_mbps;
    std::optional<double> post_mbps;
    std::optional<double> c_factor;
    std::optional<double> ramp_ms;
    std::vector<double> rates_mbps;
    std::optional<double> dwell_ms;
    std::optional<double> onset_ms;
    std::optional<double> horizon_ms;
};

void add_scenario_flags(CLI::App* cmd, ScenarioFlags& s, bool with_rate_flags)
{
    if (with_rate_flags) {
        cmd->add_option("--pre-rate", s.pre_mbps, "Pre-drop rate (Mbit/s)");
        cmd->add_option("--post-rate", s.post_mbps, "Post-drop rate (Mbit/s)");
        cmd->add_option("--c-factor", s.c_factor, "Reduction factor for ramp-contention");
    }
    cmd->add_option("--ramp-ms", s.ramp_ms, "Ramp duration for ramp-contention (ms)");
    cmd->add_option("--rates", s.rates_mbps, "Rate walk for wifi-mcs-walk (Mbit/s)")->delimiter(',');
    cmd->add_option("--dwell-ms", s.dwell_ms, "Dwell per level for wifi-mcs-walk (ms)");
    cmd->add_option("--onset-ms", s.onset_ms, "First drop time (ms)");
    cmd->add_option("--horizon-ms", s.horizon_ms, "Trace horizon (ms)");
}

ScenarioParams to_params(const ScenarioFlags& s)
{
    ScenarioParams p;
    if (s.pre_mbps)
        p.pre_rate = from_mbps(*s.pre_mbps);
    if (s.post_mbps)
        p.post_rate = from_mbps(*s.post_mbps);
    p.c_factor = s.c_factor;
    if (s.ramp_ms)
        p.ramp_duration = from_ms(*s.ramp_ms);
    if (!s.rates_mbps.empty()) {
        std::vector<BitsPerSecond> rates;
        for (double r : s.rates_mbps)
            rates.push_back(from_mbps(r));
        p.rates = std::move(rates);
    }
    if (s.dwell_ms)
        p.dwell = from_ms(*s.dwell_ms);
    if (s.onset_ms)
        p.onset = from_ms(*s.onset_ms);
    if (s.horizon_ms)
        p.horizon = from_ms(*s.horizon_ms);
    return p;
}

// ---------------------------------------------------------------- simulate

struct SimulateFlags {
    CommonFlags common;
    std::string trace_path;
    std::string scenario;
    ScenarioFlags scenario_flags;
    std::string controller = "oracle-final";
    std::optional<double> delay_ms;
    double sample_ms = 1.0;
    std::optional<double> sim_horizon_ms;
    // aimd
    double forward_ms = 1.0;
    std::optional<double> x_to_b_ms;
    std::optional<double> reverse_ms;
    double packet_bytes = 1500.0;
    double ai = 1.0;
    double md = 0.5;
    std::optional<double> mark_ms;
    std::optional<std::uint32_t> init_window;
    std::uint64_t seed = 1;
    std::string event_log_path;
};

CapacityTrace load_trace(const SimulateFlags& f)
{
    if (!f.trace_path.empty() && !f.scenario.empty())
        throw InvalidArgument("use either --trace or --scenario, not both");
    if (!f.trace_path.empty()) {
        std::optional<Seconds> horizon;
        if (f.scenario_flags.horizon_ms)
            horizon = from_ms(*f.scenario_flags.horizon_ms);
        return trace_from_csv(read_file(f.trace_path), horizon);
    }
    if (f.scenario.empty())
        throw InvalidArgument("simulate needs --trace or --scenario");
    return scenario_trace(f.scenario, to_params(f.scenario_flags));
}

int simulate_fluid_cmd(const SimulateFlags& f, const CapacityTrace& trace, Envelope env,
                       std::ostream& out, std::ostream& err)
{
    ControllerSpec controller;
    const std::string& name = f.controller;
    if (name == "oracle-final" || name == "oracle-tracking") {
        if (!f.delay_ms)
            throw InvalidArgument("--delay-ms is required for " + name);
        const Seconds d = from_ms(*f.delay_ms);
        controller = name == "oracle-final" ? ControllerSpec::oracle_final(d) : ControllerSpec::oracle_tracking(d);
        env.params["delay_ms"] = *f.delay_ms;
    } else if (name.starts_with("fixed:")) {
        double mbps = 0.0;
        try {
            std::size_t used = 0;
            mbps = std::stod(name.substr(6), &used);
            if (used != name.size() - 6)
                throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw InvalidArgument("malformed fixed rate in --controller '" + name + "'");
        }
        controller = ControllerSpec::fixed(from_mbps(mbps));
    } else {
        throw InvalidArgument("unknown controller '" + name + "'");
    }

    const Seconds horizon = f.sim_horizon_ms ? from_ms(*f.sim_horizon_ms) : trace.horizon();
    const SimConfig config{trace, controller, horizon};
    if (f.common.debug_units) {
        err << "debug: signal_delay_s=" << format_number(controller.signal_delay.value()) << "\n";
        err << "debug: horizon_s=" << format_number(horizon.value()) << "\n";
        err << "debug: sample_step_s=" << format_number(from_ms(f.sample_ms).value()) << "\n";
    }
    const FluidResult r = simulate_fluid(config);
    const auto samples = sample_result(r, from_ms(f.sample_ms));

    env.params["sample_ms"] = f.sample_ms;
    env.units = {{"t_ms", "ms"}, {"backlog_bits", "bit"}, {"delay_final_norm_ms", "ms"},
                 {"fifo_delay_ms", "ms"}, {"peak_delay_ms", "ms"}};

    ordered_json summary{{"model", "fluid"},
                         {"peak_delay_ms", to_ms(r.peak_delay_final_norm.value())},
                         {"peak_time_ms", to_ms(r.peak_time.value())},
                         {"peak_backlog_bits", r.peak_backlog.value()},
                         {"normalization_rate_mbps", to_mbps(r.normalization_rate)},
                         {"peak_fifo_delay_ms", to_ms(r.peak_fifo_delay.value())},
                         {"events", detect_events(trace).size()}};

    Output o(f.common, out);
    if (f.common.format == "json") {
        ordered_json series = ordered_json::array();
        for (const auto& s : samples)
            series.push_back({to_ms(s.t), s.backlog_bits, to_ms(s.delay_final_norm),
                              s.fifo_delay ? ordered_json(to_ms(*s.fifo_delay)) : ordered_json(nullptr)});
        o.write(json_envelope(env, {{"summary", summary},
                                    {"series_columns", {"t_ms", "backlog_bits", "delay_final_norm_ms", "fifo_delay_ms"}},
                                    {"series", series}})
                    .dump(2)
                + "\n");
        return exit_ok;
    }
    std::vector<std::string> extra;
    for (const auto& [k, v] : summary.items())
        extra.push_back("summary: " + k + "=" + (v.is_string() ? v.get<std::string>() : v.dump()));
    std::string text = csv_preamble(env, extra) + "t_ms,backlog_bits,delay_final_norm_ms,fifo_delay_ms\n";
    for (const auto& s : samples)
        text += format_number(to_ms(s.t)) + ',' + format_number(s.backlog_bits) + ',' + ms_text(s.delay_final_norm)
                + ',' + (s.fifo_delay ? ms_text(*s.fifo_delay) : std::string("NA")) + '\n';
    o.write(text);
    return exit_ok;
}

int simulate_aimd_cmd(const SimulateFlags& f, const CapacityTrace& trace, Envelope env, std::ostream& out,
                      std::ostream& err)
{
    if (!f.delay_ms && !(f.x_to_b_ms && f.reverse_ms))
        throw InvalidArgument("aimd needs --delay-ms or both --x-to-b-ms and --reverse-ms");
    // Signal path X -> B -> A; an unspecified leg takes what is left of --delay-ms.
    double x_to_b = 0.0, reverse = 0.0;
    if (f.x_to_b_ms && f.reverse_ms) {
        x_to_b = *f.x_to_b_ms;
        reverse = *f.reverse_ms;
    } else if (f.x_to_b_ms) {
        x_to_b = *f.x_to_b_ms;
        reverse = *f.delay_ms - x_to_b;
    } else if (f.reverse_ms) {
        reverse = *f.reverse_ms;
        x_to_b = *f.delay_ms - reverse;
    } else {
        x_to_b = *f.delay_ms / 2.0;
        reverse = *f.delay_ms / 2.0;
    }
    if (x_to_b < 0.0 || reverse < 0.0)
        throw InvalidArgument("signal path legs exceed --delay-ms");

    PacketSimConfig config = default_packet_config(trace, from_ms(f.forward_ms), from_ms(x_to_b), from_ms(reverse));
    config.packet_size = Bits(f.packet_bytes * 8.0);
    config.aimd = {f.ai, f.md};
    if (f.mark_ms)
        config.mark_threshold = from_ms(*f.mark_ms);
    config.seed = f.seed;
    if (f.init_window) {
        config.initial_window = *f.init_window;
    } else {
        const double rate0 = trace.capacity_at(Seconds(0.0)).value();
        const double pkts = rate0 * (config.base_rtt().value() + config.mark_threshold.value()) / config.packet_size.value();
        config.initial_window = static_cast<std::uint32_t>(std::ceil(pkts)) + 1;
    }
    if (f.common.debug_units) {
        err << "debug: forward_delay_s=" << format_number(config.forward_delay.value()) << "\n";
        err << "debug: x_to_b_delay_s=" << format_number(config.x_to_b_delay.value()) << "\n";
        err << "debug: reverse_delay_s=" << format_number(config.reverse_delay.value()) << "\n";
        err << "debug: signal_delay_s=" << format_number(config.signal_delay().value()) << "\n";
        err << "debug: mark_threshold_s=" << format_number(config.mark_threshold.value()) << "\n";
        err << "debug: packet_size_bits=" << format_number(config.packet_size.value()) << "\n";
    }

    const PacketSimResult r = simulate_packets(config);
    if (!f.event_log_path.empty()) {
        std::ofstream log(f.event_log_path, std::ios::binary);
        if (!log)
            throw InvalidArgument("cannot open event log '" + f.event_log_path + "'");
        log << event_log_to_csv(r);
    }

    env.params["forward_ms"] = f.forward_ms;
    env.params["x_to_b_ms"] = x_to_b;
    env.params["reverse_ms"] = reverse;
    env.params["packet_bytes"] = f.packet_bytes;
    env.params["ai"] = f.ai;
    env.params["md"] = f.md;
    env.params["mark_ms"] = to_ms(config.mark_threshold.value());
    env.params["init_window"] = config.initial_window;
    env.params["seed"] = f.seed;
    env.params["sample_ms"] = f.sample_ms;
    env.units = {{"t_ms", "ms"}, {"max_queue_delay_ms", "ms"}, {"throughput_mbps", "Mbit/s"},
                 {"peak_queue_delay_ms", "ms"}, {"bound_ms", "ms"}};

    ordered_json events = ordered_json::array();
    for (const auto& e : detect_events(trace)) {
        if (e.onset.value() + config.signal_delay().value() > trace.horizon().value())
            continue;
        const auto cmp = compare_to_bound(r, e, config.signal_delay());
        events.push_back({{"onset_ms", to_ms(e.onset.value())},
                          {"c_factor", cmp.c_factor},
                          {"ramp_ms", to_ms(e.ramp_duration.value())},
                          {"bound_ms", to_ms(cmp.bound.value())},
                          {"measured_ms", to_ms(cmp.measured_peak.value())},
                          {"ratio", cmp.ratio ? ordered_json(*cmp.ratio) : ordered_json(nullptr)},
                          {"violation", cmp.violation}});
    }
    ordered_json summary{{"model", "aimd"},
                         {"status", r.status == PacketSimResult::Status::ok ? "ok" : "no_congestion"},
                         {"peak_queue_delay_ms", to_ms(r.peak_queue_delay.value())},
                         {"packets", r.packets.size()}};

    // Per-bin maximum waiting time of packets entering service in the bin.
    const double step = from_ms(f.sample_ms).value();
    if (step <= 0.0)
        throw InvalidArgument("--sample-ms must be > 0");
    const auto bins = static_cast<std::size_t>(std::ceil(trace.horizon().value() / step));
    std::vector<double> max_wait(std::max<std::size_t>(bins, 1), 0.0);
    for (const auto& [t, w] : r.queue_delay_series) {
        auto& cell = max_wait[std::min(max_wait.size() - 1, static_cast<std::size_t>(t / step))];
        cell = std::max(cell, w);
    }
    auto throughput_at = [&](double t) {
        const double bin = config.throughput_bin.value();
        const auto i = std::min(r.throughput_series.size() - 1, static_cast<std::size_t>(t / bin));
        return r.throughput_series[i].second;
    };

    Output o(f.common, out);
    if (f.common.format == "json") {
        ordered_json series = ordered_json::array();
        for (std::size_t i = 0; i < max_wait.size(); ++i)
            series.push_back({to_ms(static_cast<double>(i) * step), to_ms(max_wait[i]),
                              to_mbps(throughput_at(static_cast<double>(i) * step))});
        summary["events"] = events;
        o.write(json_envelope(env, {{"summary", summary},
                                    {"series_columns", {"t_ms", "max_queue_delay_ms", "throughput_mbps"}},
                                    {"series", series}})
                    .dump(2)
                + "\n");
        return exit_ok;
    }
    std::vector<std::string> extra;
    for (const auto& [k, v] : summary.items())
        extra.push_back("summary: " + k + "=" + (v.is_string() ? v.get<std::string>() : v.dump()));
    for (const auto& e : events)
        extra.push_back("event: " + e.dump());
    std::string text = csv_preamble(env, extra) + "t_ms,max_queue_delay_ms,throughput_mbps\n";
    for (std::size_t i = 0; i < max_wait.size(); ++i) {
        const double t = static_cast<double>(i) * step;
        text += format_number(to_ms(t)) + ',' + ms_text(max_wait[i]) + ',' + format_number(to_mbps(throughput_at(t)))
                + '\n';
    }
    o.write(text);
    return exit_ok;
}

int cmd_simulate(const SimulateFlags& f, Envelope env, std::ostream& out, std::ostream& err)
{
    const CapacityTrace trace = load_trace(f);
    env.params["controller"] = f.controller;
    if (!f.scenario.empty())
        env.params["scenario"] = f.scenario;
    else
        env.params["trace"] = f.trace_path;
    if (f.sample_ms <= 0.0)
        throw InvalidArgument("--sample-ms must be > 0");
    if (f.controller == "aimd")
        return simulate_aimd_cmd(f, trace, std::move(env), out, err);
    return simulate_fluid_cmd(f, trace, std::move(env), out, err);
}

// ---------------------------------------------------------------- sweep

struct SweepFlags {
    CommonFlags common;
    std::vector<double> c_list;
    std::vector<double> delay_list_ms;
    std::vector<double> ramp_list_ms;
    std::optional<double> delay_ms;
    bool fig5 = false;
    bool fig7 = false;
    bool self_test = false;
};

std::vector<double> range(double from, double to, double step)
{
    std::vector<double> v;
    const auto n = static_cast<long>(std::floor((to - from) / step + 1e-9));
    for (long i = 0; i <= n; ++i)
        v.push_back(from + step * static_cast<double>(i));
    return v;
}

// Re-evaluates a cell straight from the piecewise formula.
double reference_q(double c, double d, double ramp)
{
    if (ramp <= d)
        return (c - 1.0) * (2.0 * d - ramp) / 2.0;
    return (c - 1.0) * d * d / (2.0 * ramp);
}

int cmd_sweep(SweepFlags f, Envelope env, std::ostream& out, std::ostream& err)
{
    if (f.fig5 && f.fig7)
        throw InvalidArgument("choose one of --fig5 and --fig7");
    if (f.fig5) {
        // Preset ranges C in [1, 10] and d in [0, 100] ms.
        if (f.c_list.empty())
            f.c_list = range(1.0, 10.0, 0.5);
        if (f.delay_list_ms.empty())
            f.delay_list_ms = range(0.0, 100.0, 5.0);
    }
    if (f.fig7) {
        if (f.c_list.empty())
            f.c_list = {2.0, 5.0, 10.0};
        if (f.ramp_list_ms.empty())
            f.ramp_list_ms = range(0.0, 500.0, 5.0);
        if (!f.delay_ms)
            f.delay_ms = 100.0;
    }
    if (f.c_list.empty())
        throw InvalidArgument("sweep needs a non-empty --c-list");
    if (f.delay_list_ms.empty() == f.ramp_list_ms.empty())
        throw InvalidArgument("sweep needs exactly one non-empty axis: --delay-list-ms or --ramp-list-ms");

    SweepGrid grid;
    if (!f.delay_list_ms.empty()) {
        std::vector<Seconds> ds;
        for (double d : f.delay_list_ms)
            ds.push_back(from_ms(d));
        grid = sweep_step(f.c_list, ds);
    } else {
        if (!f.delay_ms)
            throw InvalidArgument("--ramp-list-ms needs --delay-ms");
        std::vector<Seconds> rs;
        for (double r : f.ramp_list_ms)
            rs.push_back(from_ms(r));
        grid = sweep_ramp(f.c_list, rs, from_ms(*f.delay_ms));
    }
    if (f.common.debug_units)
        err << "debug: cells=" << grid.c_values.size() * grid.axis.size() << "\n";

    std::size_t mismatches = 0;
    if (f.self_test) {
        for (std::size_t i = 0; i < grid.c_values.size(); ++i)
            for (std::size_t j = 0; j < grid.axis.size(); ++j) {
                const bool step = grid.kind == SweepGrid::Kind::step;
                const double d = step ? grid.axis[j].value() : grid.fixed_delay.value();
                const double ramp = step ? 0.0 : grid.axis[j].value();
                const double want = reference_q(grid.c_values[i], d, ramp);
                const double got = grid.results[i][j].value();
                if (std::fabs(got - want) > 1e-12 * std::max(1.0, std::fabs(want)))
                    ++mismatches;
            }
    }

    env.params["kind"] = grid.kind == SweepGrid::Kind::step ? "step" : "ramp";
    if (f.delay_ms)
        env.params["delay_ms"] = *f.delay_ms;
    if (f.fig5)
        env.params["preset"] = "fig5";
    if (f.fig7)
        env.params["preset"] = "fig7";
    env.units = {{"d_ms", "ms"}, {"d_ramp_ms", "ms"}, {"q_ms", "ms"}};

    std::vector<std::string> extra;
    if (f.self_test)
        extra.push_back("self_test: " + std::string(mismatches == 0 ? "pass" : "fail") + " mismatches="
                        + std::to_string(mismatches));

    Output o(f.common, out);
    if (f.common.format == "json") {
        ordered_json cells = ordered_json::array();
        for (std::size_t i = 0; i < grid.c_values.size(); ++i)
            for (std::size_t j = 0; j < grid.axis.size(); ++j) {
                const bool step = grid.kind == SweepGrid::Kind::step;
                cells.push_back({{"c", grid.c_values[i]},
                                 {"d_ms", to_ms(step ? grid.axis[j].value() : grid.fixed_delay.value())},
                                 {"d_ramp_ms", to_ms(step ? 0.0 : grid.axis[j].value())},
                                 {"q_ms", to_ms(grid.results[i][j].value())}});
            }
        ordered_json results{{"cells", cells}};
        if (f.self_test)
            results["self_test"] = {{"pass", mismatches == 0}, {"mismatches", mismatches}};
        o.write(json_envelope(env, results).dump(2) + "\n");
    } else {
        std::string text = csv_preamble(env, extra) + "c,d_ms,d_ramp_ms,q_ms\n";
        for (std::size_t i = 0; i < grid.c_values.size(); ++i)
            for (std::size_t j = 0; j < grid.axis.size(); ++j) {
                const bool step = grid.kind == SweepGrid::Kind::step;
                text += format_number(grid.c_values[i]) + ','
                        + ms_text(step ? grid.axis[j].value() : grid.fixed_delay.value()) + ','
                        + ms_text(step ? 0.0 : grid.axis[j].value()) + ',' + ms_text(grid.results[i][j].value())
                        + '\n';
            }
        o.write(text);
    }
    if (mismatches != 0) {
        err << "error: self-test found " << mismatches << " cells disagreeing with the closed form\n";
        return exit_model;
    }
    return exit_ok;
}

// ---------------------------------------------------------------- scenario / ingest

struct ScenarioCmdFlags {
    CommonFlags common;
    bool list = false;
    std::string table;
    std::string name;
    ScenarioFlags params;
};

int cmd_scenario(const ScenarioCmdFlags& f, Envelope env, std::ostream& out, std::ostream& err)
{
    const int chosen = (f.list ? 1 : 0) + (f.table.empty() ? 0 : 1) + (f.name.empty() ? 0 : 1);
    if (chosen != 1)
        throw InvalidArgument("scenario needs exactly one of --list, --table, --name");
    Output o(f.common, out);
    const bool json = f.common.format == "json";

    if (f.list) {
        env.units = ordered_json::object();
        ordered_json rows = ordered_json::array();
        std::string text = csv_preamble(env) + "name,description\n";
        for (const auto& s : scenario_registry()) {
            rows.push_back({{"name", s.name}, {"description", s.description}});
            text += csv_field(s.name) + ',' + csv_field(s.description) + '\n';
        }
        o.write(json ? json_envelope(env, {{"scenarios", rows}}).dump(2) + "\n" : text);
        return exit_ok;
    }
    if (!f.table.empty()) {
        env.params["table"] = f.table;
        if (f.table == "dublin-ny") {
            env.units = {{"d_ms", "ms"}, {"q_ms_c10", "ms"}};
            ordered_json rows = ordered_json::array();
            std::string text = csv_preamble(env) + "path,d_ms,q_ms_c10,lower_bound\n";
            for (const auto& r : dublin_ny_table()) {
                if (f.common.debug_units)
                    err << "debug: " << r.label << " one_way_delay_s=" << format_number(r.one_way_delay.value())
                        << " q_s=" << format_number(r.q_at_c10.value()) << "\n";
                rows.push_back({{"path", r.label},
                                {"d_ms", to_ms(r.one_way_delay.value())},
                                {"q_ms_c10", to_ms(r.q_at_c10.value())},
                                {"lower_bound", r.lower_bound}});
                text += csv_field(r.label) + ',' + ms_text(r.one_way_delay.value()) + ','
                        + ms_text(r.q_at_c10.value()) + ',' + (r.lower_bound ? "true" : "false") + '\n';
            }
            o.write(json ? json_envelope(env, {{"rows", rows}}).dump(2) + "\n" : text);
            return exit_ok;
        }
        if (f.table == "wifi") {
            env.units = {{"rate_mbps", "Mbit/s"}};
            ordered_json rows = ordered_json::array();
            std::string text = csv_preamble(env) + "technology,note,rate_mbps\n";
            for (const auto& r : wifi_rates()) {
                rows.push_back({{"technology", r.technology}, {"note", r.note}, {"rate_mbps", to_mbps(r.rate.value())}});
                text += csv_field(r.technology) + ',' + csv_field(r.note) + ','
                        + format_number(to_mbps(r.rate.value())) + '\n';
            }
            o.write(json ? json_envelope(env, {{"rows", rows}}).dump(2) + "\n" : text);
            return exit_ok;
        }
        throw InvalidArgument("unknown table '" + f.table + "' (expected dublin-ny or wifi)");
    }

    const CapacityTrace trace = scenario_trace(f.name, to_params(f.params));
    if (json) {
        env.params["name"] = f.name;
        env.units = {{"time_s", "s"}, {"rate_bps", "bit/s"}};
        ordered_json bps = ordered_json::array();
        for (const auto& b : trace.breakpoints())
            bps.push_back({b.time.value(), b.rate.value(), std::string(to_string(b.mode))});
        ordered_json events = ordered_json::array();
        for (const auto& e : detect_events(trace))
            events.push_back({{"onset_s", e.onset.value()},
                              {"c_factor", e.c_factor()},
                              {"ramp_duration_s", e.ramp_duration.value()}});
        o.write(json_envelope(env, {{"breakpoints", bps}, {"events", events}}).dump(2) + "\n");
    } else {
        // Plain trace CSV so the output can be fed back to --trace.
        o.write(trace_to_csv(trace));
    }
    return exit_ok;
}

struct IngestFlags {
    CommonFlags common;
    std::string path;
    std::optional<double> horizon_s;
};

int cmd_ingest(const IngestFlags& f, std::ostream& out, std::ostream& err)
{
    std::optional<Seconds> horizon;
    if (f.horizon_s)
        horizon = Seconds(*f.horizon_s);
    const CapacityTrace trace = trace_from_csv(read_file(f.path), horizon);
    if (f.common.debug_units)
        err << "debug: breakpoints=" << trace.breakpoints().size()
            << " horizon_s=" << format_number(trace.horizon().value()) << "\n";
    Output(f.common, out).write(trace_to_csv(trace));
    return exit_ok;
}

std::string join(const std::vector<std::string>& args)
{
    std::string s;
    for (const auto& a : args) {
        if (!s.empty())
            s += ' ';
        s += a;
    }
    return s;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Transient queuing delay bounds and simulators"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version);

    BoundFlags bound;
    auto* b = app.add_subcommand("bound", "Closed-form peak transient delay");
    add_common(b, bound.common);
    auto* cf = b->add_option("--c-factor", bound.c_factor, "Capacity reduction factor C");
    auto* pre = b->add_option("--pre-rate", bound.pre_mbps, "Capacity before the drop (Mbit/s)");
    auto* post = b->add_option("--post-rate", bound.post_mbps, "Capacity after the drop (Mbit/s)");
    cf->excludes(pre)->excludes(post);
    b->add_option("--delay-ms", bound.delay_ms, "Signaling delay d (ms)")->required();
    b->add_option("--ramp-ms", bound.ramp_ms, "Linear ramp duration (ms)");

    SimulateFlags sim;
    auto* s = app.add_subcommand("simulate", "Run the fluid or packet simulator on a trace");
    add_common(s, sim.common);
    s->add_option("--trace", sim.trace_path, "Trace CSV path");
    s->add_option("--scenario", sim.scenario, "Registered scenario name");
    add_scenario_flags(s, sim.scenario_flags, true);
    s->add_option("--controller", sim.controller, "oracle-final, oracle-tracking, fixed:<Mbit/s> or aimd");
    s->add_option("--delay-ms", sim.delay_ms, "Signaling delay (ms)");
    s->add_option("--sample-ms", sim.sample_ms, "Output sampling step (ms)");
    s->add_option("--sim-horizon-ms", sim.sim_horizon_ms, "Simulated horizon (ms), at most the trace horizon");
    s->add_option("--forward-ms", sim.forward_ms, "aimd: sender to bottleneck delay (ms)");
    s->add_option("--x-to-b-ms", sim.x_to_b_ms, "aimd: bottleneck to receiver delay (ms)");
    s->add_option("--reverse-ms", sim.reverse_ms, "aimd: receiver to sender delay (ms)");
    s->add_option("--packet-bytes", sim.packet_bytes, "aimd: packet size (bytes)");
    s->add_option("--ai", sim.ai, "aimd: additive increase (packets per RTT)");
    s->add_option("--md", sim.md, "aimd: window factor on a mark, in (0, 1)");
    s->add_option("--mark-ms", sim.mark_ms, "aimd: marking threshold on waiting time (ms)");
    s->add_option("--init-window", sim.init_window, "aimd: initial window (packets)");
    s->add_option("--seed", sim.seed, "aimd: seed for initial send jitter");
    s->add_option("--event-log", sim.event_log_path, "aimd: write the event log CSV here");

    SweepFlags sweep;
    auto* w = app.add_subcommand("sweep", "Closed-form grids for plotting");
    add_common(w, sweep.common);
    w->add_option("--c-list", sweep.c_list, "Reduction factors")->delimiter(',');
    auto* dl = w->add_option("--delay-list-ms", sweep.delay_list_ms, "Signaling delays (ms)")->delimiter(',');
    auto* rl = w->add_option("--ramp-list-ms", sweep.ramp_list_ms, "Ramp durations (ms)")->delimiter(',');
    dl->excludes(rl);
    w->add_option("--delay-ms", sweep.delay_ms, "Fixed signaling delay for ramp sweeps (ms)");
    w->add_flag("--fig5", sweep.fig5, "Preset: C x d heat map");
    w->add_flag("--fig7", sweep.fig7, "Preset: ramp curves at d = 100 ms");
    w->add_flag("--self-test", sweep.self_test, "Re-check every cell against the closed form");

    ScenarioCmdFlags scen;
    auto* sc = app.add_subcommand("scenario", "Embedded tables and scenario traces");
    add_common(sc, scen.common);
    sc->add_flag("--list", scen.list, "List registered scenarios");
    sc->add_option("--table", scen.table, "Print a table: dublin-ny or wifi");
    sc->add_option("--name", scen.name, "Emit the trace of a scenario");
    add_scenario_flags(sc, scen.params, true);

    IngestFlags ingest;
    auto* in = app.add_subcommand("ingest", "Validate and canonicalize a trace CSV");
    add_common(in, ingest.common);
    in->add_option("path", ingest.path, "Trace CSV path")->required();
    in->add_option("--horizon-s", ingest.horizon_s, "Explicit horizon (s)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        if (!app.get_subcommands().empty())
            out << app.get_subcommands().front()->help();
        return exit_ok;
    } catch (const CLI::CallForVersion&) {
        out << version << "\n";
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }

    Envelope env;
    env.command = join(args);
    try {
        if (b->parsed())
            return cmd_bound(bound, env, out, err);
        if (s->parsed())
            return cmd_simulate(sim, env, out, err);
        if (w->parsed())
            return cmd_sweep(sweep, env, out, err);
        if (sc->parsed())
            return cmd_scenario(scen, env, out, err);
        if (in->parsed())
            return cmd_ingest(ingest, out, err);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_input;
    } catch (const ModelViolation& e) {
        err << "error: " << e.what() << "\n";
        return exit_model;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }
    return exit_usage;
}

} // namespace tqd::cli
