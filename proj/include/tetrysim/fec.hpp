#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "tetrysim/packet.hpp"
#include "tetrysim/tetrys.hpp" // Delivery

namespace tetrysim {

// Systematic block code: k sources followed by n-k repairs; any k of the n
// block packets decode the block (Cauchy generator, exact MDS).
struct FecBlockConfig {
    int k = 9;
    int n = 10;
    double redundancy() const { return static_cast<double>(n - k) / n; }
    bool valid() const { return k >= 1 && k < n && n <= 255; }
};

// Redundancy ladder mapping at group size ~10.
FecBlockConfig fec_rung_config(int rung_index);

// Generator coefficient for repair row r (0-based) and source column c.
std::uint8_t fec_coefficient(int k, int repair_row, int source_col);

// Pure block operations (the sequenced encoder/decoder below wrap these).
std::vector<std::vector<std::uint8_t>> fec_encode_block(
    const std::vector<std::vector<std::uint8_t>>& sources, const FecBlockConfig& cfg);

// received_sources: (column, payload); received_repairs: (row, combined).
// Returns (column, payload) for every recovered missing source; empty when
// fewer than k block packets are available.
std::vector<std::pair<int, std::vector<std::uint8_t>>> fec_decode_block(
    int k, const std::vector<std::pair<int, std::vector<std::uint8_t>>>& received_sources,
    const std::vector<std::pair<int, std::vector<std::uint8_t>>>& received_repairs);

class FecEncoder {
public:
    struct Stats {
        std::uint64_t sources_sent = 0;
        std::uint64_t repairs_sent = 0;
    };

    explicit FecEncoder(FecBlockConfig cfg);

    // Emits the source packet; after the block's k-th source, emits its n-k
    // repair packets back-to-back.
    std::vector<Packet> on_source_ready(std::vector<std::uint8_t> payload, Micros now);

    // Takes effect at the next block boundary.
    void set_config(FecBlockConfig cfg);
    void set_applied_request_id(std::uint32_t id) { applied_request_id_ = id; }

    FecBlockConfig config() const { return cfg_; }
    const Stats& stats() const { return stats_; }

private:
    FecBlockConfig cfg_;
    std::optional<FecBlockConfig> pending_cfg_;
    std::uint32_t next_seq_ = 1;
    std::uint32_t block_first_ = 1;
    std::vector<std::vector<std::uint8_t>> block_;
    std::uint32_t applied_request_id_ = 0;
    Stats stats_;
};

class FecDecoder {
public:
    struct Stats {
        std::uint64_t sources_received = 0;
        std::uint64_t repairs_received = 0;
        std::uint64_t blocks_decoded = 0;
    };

    std::vector<Delivery> on_packet(const Packet& pkt, Micros now,
                                    std::vector<std::uint32_t>* newly_lost = nullptr);
    AckPacket make_ack(std::optional<RedundancyFeedback> feedback, Micros now) const;

    std::uint32_t cumulative_seq() const { return cum_; }
    int observed_window_n() const { return observed_n_; }
    std::uint32_t observed_applied_id() const { return observed_applied_id_; }
    const Stats& stats() const { return stats_; }

private:
    struct Block {
        std::uint32_t first = 0, last = 0;
        std::map<int, std::vector<std::uint8_t>> sources; // column -> payload
        std::map<int, std::vector<std::uint8_t>> repairs; // row -> combined
        bool done = false;
    };

    void scan_losses(std::uint32_t up_to, std::vector<std::uint32_t>* newly_lost);
    void note_delivered(std::uint32_t seq);
    std::vector<Delivery> try_decode(Block& blk, Micros now);
    void gc();

    std::uint32_t cum_ = 0;
    std::uint32_t scanned_ = 0;
    std::set<std::uint32_t> delivered_above_;
    std::map<std::uint32_t, std::vector<std::uint8_t>> recent_sources_;
    std::map<std::uint32_t, Block> blocks_; // keyed by first_seq
    int observed_n_ = 0;
    std::uint32_t observed_applied_id_ = 0;
    Stats stats_;
};

} // namespace tetrysim
