#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tetrysim/channel.hpp"
#include "tetrysim/packet.hpp"
#include "tetrysim/scenario.hpp"

namespace tetrysim {

struct PacketRecord {
    std::uint32_t seq = 0;
    Micros send_ts = 0;
    Micros delivery_ts = -1; // -1: never delivered
    bool delivered = false;
    bool on_time = false; // delivery_ts <= send_ts + D_max
    bool recovered = false;
};

struct RungChange {
    Micros t = 0;
    int rung = 0;
    double redundancy = 0.0;
};

struct SimEvent {
    Micros t = 0;
    std::string kind; // request | applied | decode | drain
    std::string detail;
};

struct MetricsLog {
    std::vector<PacketRecord> packets; // indexed by seq-1, gapless
    std::vector<std::pair<Micros, std::uint32_t>> sent_bytes; // (send_ts, wire bytes)
    std::vector<RungChange> rung_changes; // includes the initial rung at t=0
    std::vector<SimEvent> events;
    std::uint64_t sources_emitted = 0;
    std::uint64_t repairs_emitted = 0;
    std::uint64_t sender_bytes = 0; // outgoing interface of the sender
    std::uint64_t ack_bytes = 0;    // reverse path, accounted separately
    Micros first_send = 0;
    Micros last_send = 0;
    Micros run_end = 0;
    Micros d_max = 0;
    DelaySchedule delay; // for nominal-arrival computations

    // Residual loss after decoding within the deadline.
    double ilr() const;
    double on_time_rate() const;
    // ILR restricted to sources sent in [from, to).
    double ilr_between(Micros from, Micros to) const;

    // Time-weighted mean of the active redundancy ratio.
    double mean_redundancy() const;
    double mean_redundancy_between(Micros from, Micros to) const;
    // Repair packets as a fraction of all packets actually sent.
    double sent_redundancy() const;

    // Sender wire throughput averaged over the emission span.
    double mean_kbps() const;
    double mean_kbps_between(Micros from, Micros to) const;
    std::vector<std::pair<Micros, double>> bandwidth_timeline(Micros bin) const;

    // Per recovered packet: delivery_ts minus its nominal arrival
    // (send_ts + one-way delay), in milliseconds.
    std::vector<double> recovery_delay_samples_ms() const;

    // Maximal runs of consecutive late-or-lost source packets.
    std::uint64_t degraded_intervals() const;

    std::uint64_t digest() const; // determinism fingerprint

    void write_csvs(const std::filesystem::path& dir) const;
    std::string summary_line() const;
};

MetricsLog run_scenario(const ScenarioConfig& cfg);

} // namespace tetrysim
