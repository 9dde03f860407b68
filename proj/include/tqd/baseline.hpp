#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tqd/trace.hpp"

namespace tqd {

// Packet-level discrete-event model of one ACK-clocked AIMD flow A -> X -> B
// with ECN-style marking at the bottleneck X. X has an infinite FIFO; a
// packet's service time is packet_size / capacity at its service start.
// Marks are applied at dequeue when the packet's waiting time exceeds
// mark_threshold and are echoed on the ACK (B -> A). A marked ACK cuts the
// window at most once per window of data.

struct AimdParams {
    double additive_increase = 1.0;       // packets per round trip
    double multiplicative_decrease = 0.5; // window factor applied on a mark
};

struct PacketSimConfig {
    CapacityTrace trace;
    Bits packet_size{12000.0};
    Seconds forward_delay;  // A -> X
    Seconds x_to_b_delay;   // X -> B
    Seconds reverse_delay;  // B -> A
    AimdParams aimd;
    Seconds mark_threshold;
    std::uint32_t initial_window = 10; // packets; 0 sends nothing
    std::uint64_t seed = 1;
    Seconds throughput_bin{0.1};

    Seconds signal_delay() const { return Seconds(x_to_b_delay.value() + reverse_delay.value()); }
    Seconds base_rtt() const
    {
        return Seconds(forward_delay.value() + x_to_b_delay.value() + reverse_delay.value());
    }
};

// Defaults for a given path: threshold of one base RTT, an initial window
// that fills the pipe plus the threshold queue at the initial capacity.
PacketSimConfig default_packet_config(CapacityTrace trace, Seconds forward_delay, Seconds x_to_b_delay,
                                      Seconds reverse_delay);

enum class PacketEventType { enqueue, dequeue, mark, ack, window_change };

struct PacketLogEntry {
    double t;
    PacketEventType type;
    std::uint64_t packet_id;
    double queue_bits; // bits waiting at X after the event (excluding the packet in service)
    double detail;     // dequeue/mark: waiting time (s); ack: 1 if marked; window_change: new cwnd
};

struct PacketRecord {
    std::uint64_t id;
    double enqueue;
    double service_start;
    double departure;
    bool marked;
};

struct PacketSimResult {
    enum class Status {
        ok,
        no_congestion, // no packet was marked before the first capacity drop
    };

    Status status = Status::ok;
    std::vector<PacketLogEntry> events;
    std::vector<PacketRecord> packets; // in dequeue order
    std::vector<std::pair<double, double>> queue_delay_series; // (service start, waiting time)
    Seconds peak_queue_delay;
    std::vector<std::pair<double, double>> throughput_series; // (bin start, bits/s)
    Seconds horizon;

    // Largest waiting time among packets enqueued at or after t.
    Seconds peak_queue_delay_after(Seconds t) const;
};

PacketSimResult simulate_packets(const PacketSimConfig& config);

struct BoundComparison {
    Seconds measured_peak;
    Seconds bound;
    std::optional<double> ratio; // measured / bound; absent when the bound is 0
    bool violation;
    Seconds tolerance;
    double c_factor;
    Seconds signal_delay;
    Seconds ramp_duration;
};

// Compares the peak waiting time after the event with the closed-form bound.
// A measurement below bound - tolerance is a violation.
BoundComparison compare_to_bound(const PacketSimResult& result, const CapacityEvent& event,
                                 Seconds signal_delay, Seconds tolerance = Seconds(1e-3));

std::string_view to_string(PacketEventType type);
// Columns t_s,event_type,packet_id,queue_bits,detail.
std::string event_log_to_csv(const PacketSimResult& result);
std::string comparison_to_json(const BoundComparison& cmp);

} // namespace tqd
