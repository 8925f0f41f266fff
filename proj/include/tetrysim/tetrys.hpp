#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "tetrysim/packet.hpp"

namespace tetrysim {

struct Delivery {
    std::uint32_t seq = 0;
    std::vector<std::uint8_t> payload;
    Micros delivery_ts = 0;
    bool recovered = false; // true when rebuilt from repairs, false when direct
};

// Sender side: elastic encoding window over sent-but-unacknowledged source
// packets. Every k-th source packet is followed by one repair packet combining
// the whole current window.
class TetrysEncoder {
public:
    struct Stats {
        std::uint64_t sources_sent = 0;
        std::uint64_t repairs_sent = 0;
        std::uint64_t evicted = 0; // coding-horizon losses from the window cap
    };

    TetrysEncoder(int k, std::uint64_t seed, std::size_t window_cap = 1024);

    // Emits the source packet and, after every k-th source, a repair over the
    // current window.
    std::vector<Packet> on_source_ready(std::vector<std::uint8_t> payload, Micros now);

    // Removes acknowledged packets; stale ACKs (below a previous cumulative
    // sequence) are ignored.
    void on_ack(const AckPacket& ack);

    // Adaptation event: changes the repair cadence and resets its counter.
    void set_k(int k);
    void set_applied_request_id(std::uint32_t id) { applied_request_id_ = id; }

    // Repair over the current (non-empty) window.
    RepairPacket build_repair(Micros now);

    int k() const { return k_; }
    std::size_t window_size() const { return window_.size(); }
    std::uint32_t window_first_seq() const { return window_.empty() ? 0 : window_.front().seq; }
    std::uint32_t next_seq() const { return next_seq_; }
    const Stats& stats() const { return stats_; }

private:
    int k_;
    std::uint64_t seed_;
    std::size_t window_cap_;
    std::uint32_t next_seq_ = 1;
    std::uint32_t last_cum_ = 0;
    int since_last_repair_ = 0;
    std::uint64_t repair_index_ = 0;
    std::uint32_t applied_request_id_ = 0;
    std::deque<SourcePacket> window_;
    Stats stats_;
};

// Receiver side: delivers source packets immediately, tracks losses, and
// reduces incoming repairs into an incrementally eliminated linear system.
// All pending losses are recovered together once the usable (independent)
// repair count matches the loss count.
class TetrysDecoder {
public:
    struct Stats {
        std::uint64_t sources_received = 0;
        std::uint64_t repairs_received = 0;
        std::uint64_t repairs_redundant = 0; // carried no unknown
        std::uint64_t repairs_dependent = 0; // vanished under elimination
        std::uint64_t rows_added = 0;
        std::uint64_t decode_events = 0;
        std::uint64_t given_up = 0; // losses stranded behind the coding horizon
    };

    // pkt must be a source or repair packet. Returns everything newly
    // deliverable; when newly_lost is non-null it receives the sequence
    // numbers first observed missing during this call (for loss estimators).
    std::vector<Delivery> on_packet(const Packet& pkt, Micros now,
                                    std::vector<std::uint32_t>* newly_lost = nullptr);

    AckPacket make_ack(std::optional<RedundancyFeedback> feedback, Micros now) const;

    std::uint32_t cumulative_seq() const { return cum_; }
    std::size_t pending_losses() const { return unknowns_.size(); } // y
    std::size_t usable_rank() const { return rows_.size(); }        // z
    std::size_t repair_deficit() const { return unknowns_.size() - rows_.size(); } // Z

    std::optional<std::uint32_t> first_gap_seq() const;
    // (seq, arrival) of the received source packet preceding the first gap.
    std::optional<std::pair<std::uint32_t, Micros>> gap_predecessor() const;

    // Sender state as observed from repair headers.
    int observed_window_n() const { return observed_n_; }
    std::uint32_t observed_applied_id() const { return observed_applied_id_; }

    const Stats& stats() const { return stats_; }

private:
    struct Unknown {
        std::uint32_t seq;
        std::uint32_t pred_seq;   // last directly received seq before the gap
        Micros pred_arrival;
    };
    struct Row {
        std::vector<std::uint8_t> coef; // indexed by unknown column, short = 0
        std::vector<std::uint8_t> rhs;
        std::size_t pivot = 0;
    };

    void scan_losses(std::uint32_t up_to, std::vector<std::uint32_t>* newly_lost);
    void note_delivered(std::uint32_t seq);
    void drop_stranded(std::uint32_t repair_first);
    std::vector<Delivery> add_repair(const RepairPacket& r, Micros now);
    std::vector<Delivery> solve(Micros now);
    std::uint8_t coef_at(const Row& row, std::size_t col) const {
        return col < row.coef.size() ? row.coef[col] : 0;
    }

    std::uint32_t cum_ = 0;
    std::uint32_t scanned_ = 0; // highest seq checked for gaps
    std::set<std::uint32_t> delivered_above_;
    std::map<std::uint32_t, std::vector<std::uint8_t>> known_payloads_;
    std::uint32_t last_src_seq_ = 0;
    Micros last_src_arrival_ = 0;
    std::vector<Unknown> unknowns_; // ascending seq; the linear system columns
    std::vector<Row> rows_;         // sorted by pivot, forward-eliminated
    int observed_n_ = 0;
    std::uint32_t observed_applied_id_ = 0;
    Stats stats_;
};

} // namespace tetrysim
