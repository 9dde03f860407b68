#include "tqd/fluid.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "tqd/format.hpp"

namespace tqd {

namespace {

void validate(const SimConfig& config)
{
    if (config.horizon > config.trace.horizon())
        throw InvalidArgument("simulation horizon exceeds trace horizon");
    if (config.horizon.value() <= 0.0)
        throw InvalidArgument("simulation horizon must be > 0");
    if (config.controller.kind == ControllerSpec::Kind::fixed_rate
        && !(config.controller.rate > 0.0 && std::isfinite(config.controller.rate)))
        throw InvalidArgument("fixed sender rate must be > 0");
}

// Functions restricted to the simulated horizon.
struct Inputs {
    RateFunction sender;
    RateFunction capacity;
};

Inputs build_inputs(const SimConfig& config)
{
    validate(config);
    const double h = config.horizon.value();
    const RateFunction& cap = config.trace.rate_function();
    const double d = config.controller.signal_delay.value();
    const double initial = cap.at(0.0);

    RateFunction sender;
    switch (config.controller.kind) {
    case ControllerSpec::Kind::fixed_rate:
        sender = RateFunction::constant(config.controller.rate, cap.horizon());
        break;
    case ControllerSpec::Kind::oracle_tracking:
        sender = cap.delayed(d, initial);
        break;
    case ControllerSpec::Kind::oracle_final: {
        const auto events = detect_events(config.trace);
        for (std::size_t i = 1; i < events.size(); ++i)
            if (events[i].onset.value() < events[i - 1].onset.value() + d)
                throw ModelViolation("signal windows overlap: event at "
                                     + format_number(events[i].onset.value())
                                     + " s starts before the signal of the event at "
                                     + format_number(events[i - 1].onset.value())
                                     + " s reaches the sender");
        RateFunction target = cap;
        for (const auto& e : events)
            target = target.with_constant(e.onset.value(), e.end().value(), e.post_rate.value());
        sender = target.delayed(d, initial);
        break;
    }
    }
    return {sender.truncated(h), cap.truncated(h)};
}

std::vector<double> merged_boundaries(const RateFunction& a, const RateFunction& b)
{
    std::vector<double> ts;
    for (const auto& p : a.pieces())
        ts.push_back(p.t0);
    for (const auto& p : b.pieces())
        ts.push_back(p.t0);
    ts.push_back(a.horizon());
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
}

// Smallest tau in (0, len] with b0 + n*tau + h*tau^2 = 0, given b0 > 0, the
// backlog decreasing on the interval and the value at len <= 0.
double first_empty_time(double b0, double n, double h, double len)
{
    double tau;
    const double disc = std::max(0.0, n * n - 4.0 * h * b0);
    if (h == 0.0) {
        tau = -b0 / n;
    } else {
        // n <= 0 on a decreasing interval; q > 0 avoids cancellation.
        const double q = 0.5 * (-n + std::sqrt(disc));
        const double r1 = b0 / q;
        const double r2 = q / h;
        tau = r2 > 0.0 ? std::min(r1, r2) : r1;
    }
    return std::clamp(tau, 0.0, len);
}

} // namespace

RateFunction sender_rate_function(const SimConfig& config) { return build_inputs(config).sender; }

BitsPerSecond sender_rate(const SimConfig& config, Seconds t)
{
    if (t > config.horizon)
        throw InvalidArgument("time outside simulation horizon");
    return BitsPerSecond(sender_rate_function(config).at(t.value()));
}

double FluidResult::backlog_at(double t) const
{
    if (t < 0.0 || t > horizon.value())
        throw InvalidArgument("time outside simulation horizon");
    auto it = std::upper_bound(backlog_segments.begin(), backlog_segments.end(), t,
                               [](double v, const BacklogSegment& s) { return v < s.t1; });
    if (it == backlog_segments.end())
        --it;
    return std::max(0.0, it->at(t));
}

namespace {

// Time to serve `backlog` bits starting at t, or nullopt if the capacity
// integral up to h falls short.
std::optional<double> drain_time(const RateFunction& cap, double t, double backlog, double h)
{
    if (backlog <= 0.0)
        return 0.0;
    double remaining = backlog;
    double pos = t;
    for (std::size_t i = cap.piece_index(pos); i < cap.pieces().size(); ++i) {
        const auto& p = cap.pieces()[i];
        if (p.t0 >= h)
            break;
        const double end = std::min(p.t1, h);
        const double available = p.integral(pos, end);
        if (remaining <= available) {
            const double r = p.at(pos);
            double tau;
            if (p.slope == 0.0) {
                tau = remaining / r;
            } else {
                const double disc = std::max(0.0, r * r + 2.0 * p.slope * remaining);
                tau = 2.0 * remaining / (r + std::sqrt(disc));
            }
            return std::min(pos + tau, end) - t;
        }
        remaining -= available;
        pos = end;
    }
    return std::nullopt;
}

} // namespace

std::optional<Seconds> fifo_delay_at(const FluidResult& result, const CapacityTrace& trace, Seconds t)
{
    const double h = std::min(result.horizon.value(), trace.horizon().value());
    if (auto d = drain_time(trace.rate_function(), t.value(), result.backlog_at(t.value()), h))
        return Seconds(*d);
    return std::nullopt;
}

namespace {

void compute_fifo_peak(FluidResult& result, const CapacityTrace& trace)
{
    const double h = result.horizon.value();
    auto delay = [&](double t) { return fifo_delay_at(result, trace, Seconds(t)); };

    double domain_end = h;
    if (!delay(h)) {
        double lo = 0.0; // defined
        double hi = h;   // undefined
        if (!delay(0.0)) {
            domain_end = 0.0;
        } else {
            for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, h); ++i) {
                const double mid = 0.5 * (lo + hi);
                (delay(mid) ? lo : hi) = mid;
            }
            domain_end = lo;
        }
    }

    double best = 0.0;
    auto consider = [&](double t) {
        if (auto d = delay(t))
            best = std::max(best, d->value());
    };
    consider(domain_end);
    constexpr int subdivisions = 32;
    for (const auto& seg : result.backlog_segments) {
        if (seg.t0 > domain_end)
            break;
        const double a = seg.t0;
        const double b = std::min(seg.t1, domain_end);
        if (seg.b0 <= 0.0 && seg.end_value() <= 0.0)
            continue;
        std::vector<double> ts(subdivisions + 1);
        std::vector<double> vs(subdivisions + 1);
        for (int i = 0; i <= subdivisions; ++i) {
            ts[i] = a + (b - a) * i / subdivisions;
            vs[i] = delay(ts[i]).value_or(Seconds(0.0)).value();
        }
        for (int i = 0; i <= subdivisions; ++i) {
            best = std::max(best, vs[i]);
            if (i == 0 || i == subdivisions || vs[i] < vs[i - 1] || vs[i] < vs[i + 1])
                continue;
            // Golden-section refinement around an interior local maximum.
            double lo = ts[i - 1];
            double hi = ts[i + 1];
            constexpr double g = 0.6180339887498949;
            for (int it = 0; it < 80; ++it) {
                const double x1 = hi - g * (hi - lo);
                const double x2 = lo + g * (hi - lo);
                const double v1 = delay(x1).value_or(Seconds(0.0)).value();
                const double v2 = delay(x2).value_or(Seconds(0.0)).value();
                best = std::max({best, v1, v2});
                (v1 < v2 ? lo : hi) = v1 < v2 ? x1 : x2;
            }
        }
    }
    result.peak_fifo_delay = Seconds(best);
    result.fifo_domain_end = Seconds(domain_end);
}

} // namespace

FluidResult simulate_fluid(const SimConfig& config)
{
    Inputs in = build_inputs(config);
    const auto boundaries = merged_boundaries(in.sender, in.capacity);

    FluidResult result;
    result.horizon = config.horizon;
    double backlog = 0.0;
    double peak = 0.0;
    double peak_time = 0.0;
    double bits_in = 0.0;
    double bits_out = 0.0;

    auto push = [&](double u, double v, double b0, double n, double h, bool busy,
                    const RatePiece& sp, const RatePiece& cp) {
        result.backlog_segments.push_back({u, v, b0, n, h});
        const double in_bits = sp.integral(u, v);
        bits_in += in_bits;
        bits_out += busy ? cp.integral(u, v) : in_bits;
    };

    for (std::size_t k = 0; k + 1 < boundaries.size(); ++k) {
        const double a = boundaries[k];
        const double b = boundaries[k + 1];
        const RatePiece& sp = in.sender.pieces()[in.sender.piece_index(a)];
        const RatePiece& cp = in.capacity.pieces()[in.capacity.piece_index(a)];
        const double n0 = sp.at(a) - cp.at(a);
        const double kslope = sp.slope - cp.slope;

        // Split where the net rate changes sign so each piece is monotone.
        std::vector<double> cuts{a};
        if (kslope != 0.0) {
            const double root = a - n0 / kslope;
            if (root > a && root < b)
                cuts.push_back(root);
        }
        cuts.push_back(b);

        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
            const double u = cuts[c];
            const double v = cuts[c + 1];
            const double len = v - u;
            const double n = n0 + kslope * (u - a);
            const double h = 0.5 * kslope;
            const double n_mid = n + kslope * 0.5 * len;

            if (n_mid >= 0.0) {
                push(u, v, backlog, n, h, true, sp, cp);
                backlog = std::max(0.0, backlog + n * len + h * len * len);
            } else if (backlog <= 0.0) {
                push(u, v, 0.0, 0.0, 0.0, false, sp, cp);
                backlog = 0.0;
            } else {
                const double end_value = backlog + n * len + h * len * len;
                if (end_value > 0.0) {
                    push(u, v, backlog, n, h, true, sp, cp);
                    backlog = end_value;
                } else {
                    const double tau = first_empty_time(backlog, n, h, len);
                    if (tau > 0.0)
                        push(u, u + tau, backlog, n, h, true, sp, cp);
                    if (u + tau < v)
                        push(u + tau, v, 0.0, 0.0, 0.0, false, sp, cp);
                    backlog = 0.0;
                }
            }
            if (backlog > peak) {
                peak = backlog;
                peak_time = v;
            }
        }
    }

    result.peak_backlog = Bits(peak);
    result.peak_time = Seconds(peak_time);
    result.bits_in = Bits(bits_in);
    result.bits_out = Bits(bits_out);

    double norm = config.trace.capacity_at(Seconds(peak_time)).value();
    for (const auto& e : detect_events(config.trace))
        if (e.onset.value() <= peak_time)
            norm = e.post_rate.value();
    result.normalization_rate = norm;
    result.peak_delay_final_norm = Seconds(peak / norm);

    result.sender_rate = std::move(in.sender);
    result.capacity = std::move(in.capacity);
    compute_fifo_peak(result, config.trace);
    return result;
}

std::vector<FluidSample> sample_result(const FluidResult& result, Seconds step)
{
    if (step.value() <= 0.0)
        throw InvalidArgument("sample step must be > 0");
    const double h = result.horizon.value();
    const auto count = static_cast<std::size_t>(std::floor(h / step.value() + 1e-9));
    std::vector<FluidSample> out;
    out.reserve(count + 1);
    for (std::size_t i = 0; i <= count; ++i) {
        const double t = std::min(h, static_cast<double>(i) * step.value());
        const double b = result.backlog_at(t);
        out.push_back({t, b, b / result.normalization_rate, drain_time(result.capacity, t, b, h)});
    }
    return out;
}

std::string fluid_result_to_json(const FluidResult& r)
{
    nlohmann::json segments = nlohmann::json::array();
    for (const auto& s : r.backlog_segments)
        segments.push_back({{"t0", s.t0}, {"t1", s.t1}, {"b0", s.b0}, {"slope", s.slope},
                            {"curvature", s.curvature}});
    nlohmann::json j{
        {"peak_backlog_bits", r.peak_backlog.value()},
        {"peak_time_s", r.peak_time.value()},
        {"peak_delay_final_norm_s", r.peak_delay_final_norm.value()},
        {"normalization_rate_bps", r.normalization_rate},
        {"peak_fifo_delay_s", r.peak_fifo_delay.value()},
        {"fifo_domain_end_s", r.fifo_domain_end.value()},
        {"bits_in", r.bits_in.value()},
        {"bits_out", r.bits_out.value()},
        {"final_backlog_bits", r.final_backlog()},
        {"horizon_s", r.horizon.value()},
        {"segments", segments},
    };
    return j.dump(2);
}

std::string samples_to_csv(const std::vector<FluidSample>& samples)
{
    std::string out = "t_s,backlog_bits,delay_final_norm_s,fifo_delay_s\n";
    for (const auto& s : samples) {
        out += format_number(s.t) + ',' + format_number(s.backlog_bits) + ','
               + format_number(s.delay_final_norm) + ','
               + (s.fifo_delay ? format_number(*s.fifo_delay) : std::string("NA")) + '\n';
    }
    return out;
}

} // namespace tqd
