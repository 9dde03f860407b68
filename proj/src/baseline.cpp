#include "tqd/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <random>

#include "json.hpp"
#include "tqd/analytic.hpp"
#include "tqd/format.hpp"

namespace tqd {

PacketSimConfig default_packet_config(CapacityTrace trace, Seconds forward_delay, Seconds x_to_b_delay,
                                      Seconds reverse_delay)
{
    const double rtt = forward_delay.value() + x_to_b_delay.value() + reverse_delay.value();
    PacketSimConfig config{std::move(trace), Bits(12000.0), forward_delay, x_to_b_delay, reverse_delay,
                           AimdParams{},     Seconds(rtt)};
    const double rate0 = config.trace.capacity_at(Seconds(0.0)).value();
    const double packets = rate0 * 2.0 * rtt / config.packet_size.value();
    config.initial_window = static_cast<std::uint32_t>(std::ceil(packets)) + 1;
    return config;
}

namespace {

enum class Kind { send, arrive_x, service_done, ack_arrive };

struct Event {
    double t;
    std::uint64_t seq;
    Kind kind;
    std::uint64_t packet_id;
    bool marked;
};

struct Later {
    bool operator()(const Event& a, const Event& b) const
    {
        return a.t != b.t ? a.t > b.t : a.seq > b.seq;
    }
};

struct Queued {
    std::uint64_t id;
    double enqueue;
};

void validate(const PacketSimConfig& c)
{
    if (c.packet_size.value() <= 0.0)
        throw InvalidArgument("packet size must be > 0");
    const auto& a = c.aimd;
    if (!(a.multiplicative_decrease > 0.0 && a.multiplicative_decrease < 1.0))
        throw InvalidArgument("multiplicative decrease must lie in (0, 1)");
    if (!(a.additive_increase >= 0.0) || !std::isfinite(a.additive_increase))
        throw InvalidArgument("additive increase must be >= 0");
    if (c.throughput_bin.value() <= 0.0)
        throw InvalidArgument("throughput bin must be > 0");
}

class Simulation {
public:
    explicit Simulation(const PacketSimConfig& config) : c_(config), cwnd_(config.initial_window)
    {
        result_.horizon = config.trace.horizon();
    }

    PacketSimResult run()
    {
        schedule_initial_sends();
        const double horizon = c_.trace.horizon().value();
        while (!events_.empty()) {
            const Event e = events_.top();
            if (e.t > horizon)
                break;
            events_.pop();
            switch (e.kind) {
            case Kind::send:
                send(e.t);
                break;
            case Kind::arrive_x:
                arrive(e.t, e.packet_id);
                break;
            case Kind::service_done:
                service_done(e.t);
                break;
            case Kind::ack_arrive:
                ack(e.t, e.packet_id, e.marked);
                break;
            }
        }
        finish();
        return std::move(result_);
    }

private:
    void schedule(double t, Kind kind, std::uint64_t id = 0, bool marked = false)
    {
        events_.push({t, next_seq_++, kind, id, marked});
    }

    void log(double t, PacketEventType type, std::uint64_t id, double detail)
    {
        result_.events.push_back({t, type, id, queue_bits_, detail});
    }

    void schedule_initial_sends()
    {
        // Only source of randomness: the phase of the first flight.
        std::mt19937_64 rng(c_.seed);
        const double span = c_.base_rtt().value();
        std::vector<double> times(c_.initial_window);
        for (auto& t : times)
            t = span * static_cast<double>(rng() >> 11) * 0x1.0p-53;
        std::sort(times.begin(), times.end());
        for (double t : times)
            schedule(t, Kind::send);
    }

    void send(double now)
    {
        const std::uint64_t id = next_id_++;
        ++inflight_;
        schedule(now + c_.forward_delay.value(), Kind::arrive_x, id);
    }

    void arrive(double now, std::uint64_t id)
    {
        queue_.push_back({id, now});
        queue_bits_ += c_.packet_size.value();
        log(now, PacketEventType::enqueue, id, 0.0);
        if (!busy_)
            start_service(now);
    }

    void start_service(double now)
    {
        const Queued q = queue_.front();
        queue_.pop_front();
        queue_bits_ -= c_.packet_size.value();
        if (queue_.empty())
            queue_bits_ = 0.0;
        const double wait = now - q.enqueue;
        const bool marked = wait > c_.mark_threshold.value();
        log(now, PacketEventType::dequeue, q.id, wait);
        if (marked)
            log(now, PacketEventType::mark, q.id, wait);
        busy_ = true;
        in_service_ = {q.id, q.enqueue, now, 0.0, marked};
        const double rate = c_.trace.capacity_at(Seconds(now)).value();
        schedule(now + c_.packet_size.value() / rate, Kind::service_done, q.id);
        result_.queue_delay_series.emplace_back(now, wait);
    }

    void service_done(double now)
    {
        in_service_.departure = now;
        result_.packets.push_back(in_service_);
        schedule(now + c_.x_to_b_delay.value() + c_.reverse_delay.value(), Kind::ack_arrive,
                 in_service_.id, in_service_.marked);
        busy_ = false;
        if (!queue_.empty())
            start_service(now);
    }

    void ack(double now, std::uint64_t id, bool marked)
    {
        log(now, PacketEventType::ack, id, marked ? 1.0 : 0.0);
        --inflight_;
        const double before = cwnd_;
        if (marked) {
            if (!recover_ || id > *recover_) {
                cwnd_ = std::max(1.0, cwnd_ * c_.aimd.multiplicative_decrease);
                recover_ = next_id_ - 1;
                log(now, PacketEventType::window_change, id, cwnd_);
            }
        } else if (cwnd_ > 0.0) {
            cwnd_ += c_.aimd.additive_increase / cwnd_;
            if (std::floor(cwnd_) != std::floor(before))
                log(now, PacketEventType::window_change, id, cwnd_);
        }
        while (static_cast<double>(inflight_) + 1.0 <= cwnd_)
            send(now);
    }

    void finish()
    {
        double peak = 0.0;
        for (const auto& [t, wait] : result_.queue_delay_series)
            peak = std::max(peak, wait);
        result_.peak_queue_delay = Seconds(peak);

        const double bin = c_.throughput_bin.value();
        const double horizon = c_.trace.horizon().value();
        const auto bins = static_cast<std::size_t>(std::ceil(horizon / bin));
        std::vector<double> bits(std::max<std::size_t>(bins, 1), 0.0);
        for (const auto& p : result_.packets)
            bits[std::min(bits.size() - 1, static_cast<std::size_t>(p.departure / bin))] +=
                c_.packet_size.value();
        for (std::size_t i = 0; i < bits.size(); ++i)
            result_.throughput_series.emplace_back(static_cast<double>(i) * bin, bits[i] / bin);

        const auto events = detect_events(c_.trace);
        const double first_drop = events.empty() ? horizon : events.front().onset.value();
        const bool reached = std::any_of(result_.packets.begin(), result_.packets.end(),
                                         [&](const PacketRecord& p) {
                                             return p.marked && p.service_start < first_drop;
                                         });
        result_.status = reached ? PacketSimResult::Status::ok : PacketSimResult::Status::no_congestion;
    }

    const PacketSimConfig& c_;
    PacketSimResult result_;
    std::priority_queue<Event, std::vector<Event>, Later> events_;
    std::uint64_t next_seq_ = 0;

    std::deque<Queued> queue_;
    double queue_bits_ = 0.0;
    bool busy_ = false;
    PacketRecord in_service_{};

    double cwnd_;
    std::uint64_t inflight_ = 0;
    std::uint64_t next_id_ = 0;
    std::optional<std::uint64_t> recover_;
};

} // namespace

Seconds PacketSimResult::peak_queue_delay_after(Seconds t) const
{
    double peak = 0.0;
    for (const auto& p : packets)
        if (p.enqueue >= t.value())
            peak = std::max(peak, p.service_start - p.enqueue);
    return Seconds(peak);
}

PacketSimResult simulate_packets(const PacketSimConfig& config)
{
    validate(config);
    return Simulation(config).run();
}

BoundComparison compare_to_bound(const PacketSimResult& result, const CapacityEvent& event,
                                 Seconds signal_delay, Seconds tolerance)
{
    if (event.onset.value() + signal_delay.value() > result.horizon.value())
        throw InvalidArgument("event window lies outside the simulated range");
    const double c = event.c_factor();
    const Seconds bound = event.ramp_duration.value() == 0.0
                              ? peak_delay_step({c, signal_delay})
                              : peak_delay_ramp({c, signal_delay, event.ramp_duration});
    const Seconds measured = result.peak_queue_delay_after(event.onset);
    BoundComparison cmp{measured, bound, std::nullopt, false, tolerance, c, signal_delay,
                        event.ramp_duration};
    if (bound.value() > 0.0)
        cmp.ratio = measured.value() / bound.value();
    cmp.violation = measured.value() < bound.value() - tolerance.value();
    return cmp;
}

std::string_view to_string(PacketEventType type)
{
    switch (type) {
    case PacketEventType::enqueue:
        return "enqueue";
    case PacketEventType::dequeue:
        return "dequeue";
    case PacketEventType::mark:
        return "mark";
    case PacketEventType::ack:
        return "ack";
    case PacketEventType::window_change:
        return "window_change";
    }
    return "unknown";
}

std::string event_log_to_csv(const PacketSimResult& result)
{
    std::string out = "t_s,event_type,packet_id,queue_bits,detail\n";
    for (const auto& e : result.events) {
        out += format_number(e.t);
        out += ',';
        out += to_string(e.type);
        out += ',';
        out += std::to_string(e.packet_id);
        out += ',';
        out += format_number(e.queue_bits);
        out += ',';
        out += format_number(e.detail);
        out += '\n';
    }
    return out;
}

std::string comparison_to_json(const BoundComparison& cmp)
{
    nlohmann::json j{
        {"measured_peak_s", cmp.measured_peak.value()},
        {"bound_s", cmp.bound.value()},
        {"ratio", cmp.ratio ? nlohmann::json(*cmp.ratio) : nlohmann::json(nullptr)},
        {"violation", cmp.violation},
        {"tolerance_s", cmp.tolerance.value()},
        {"c_factor", cmp.c_factor},
        {"signal_delay_s", cmp.signal_delay.value()},
        {"ramp_duration_s", cmp.ramp_duration.value()},
    };
    return j.dump(2);
}

} // namespace tqd
