#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace tetrysim {

// All simulation timestamps are integer microseconds on a global clock.
using Micros = std::int64_t;

constexpr Micros ms(double v) { return static_cast<Micros>(v * 1000.0); }
constexpr double to_ms(Micros v) { return static_cast<double>(v) / 1000.0; }

enum class FeedbackDirection : std::uint8_t { Increase = 0, Decrease = 1 };

struct RedundancyFeedback {
    std::uint32_t request_id = 0; // monotone per receiver, 0 means none
    FeedbackDirection direction = FeedbackDirection::Increase;
    bool operator==(const RedundancyFeedback&) const = default;
};

struct SourcePacket {
    std::uint32_t seq = 0; // 1-based, gapless at the sender
    Micros send_ts = 0;
    std::vector<std::uint8_t> payload;
};

// Linear combination over the window [first_seq, last_seq]. Coefficients are
// regenerated at the receiver from (coeff_seed, first_seq, last_seq), so the
// packet carries a seed instead of a coefficient vector. window_n is the
// sender's current code parameter n = k+1 and applied_request_id confirms the
// most recently applied redundancy feedback; both ride in the repair header
// so the receiver can track the sender's state without a new packet type.
struct RepairPacket {
    std::uint32_t first_seq = 0;
    std::uint32_t last_seq = 0;
    std::uint64_t coeff_seed = 0;
    Micros send_ts = 0;
    std::uint8_t window_n = 0;
    std::uint32_t applied_request_id = 0;
    std::vector<std::uint8_t> combined; // length-prefixed, padded combination
};

struct AckPacket {
    std::uint32_t cumulative_seq = 0; // all seqs <= this received or decoded
    Micros send_ts = 0;
    std::optional<RedundancyFeedback> feedback;
};

using Packet = std::variant<SourcePacket, RepairPacket, AckPacket>;

// Canonical wire encoding (big-endian, fixed-width headers) used for the
// simulator's byte accounting. Layout per type:
//   source: 'S' u8 | seq u32 | send_ts i64 | len u16 | payload
//   repair: 'R' u8 | first u32 | last u32 | seed u64 | send_ts i64 |
//           window_n u8 | applied_id u32 | len u16 | payload
//   ack:    'A' u8 | cum u32 | send_ts i64 | has_fb u8 [| id u32 | dir u8]
std::vector<std::uint8_t> serialize(const Packet& p);
Packet deserialize(std::span<const std::uint8_t> bytes);
std::size_t wire_size(const Packet& p);

// Repair coefficients: uniform over [1, 255] (never zero, so every window
// packet participates), deterministic in (seed, first_seq, last_seq).
std::vector<std::uint8_t> repair_coefficients(std::uint64_t seed,
                                              std::uint32_t first_seq,
                                              std::uint32_t last_seq);

// Shared length-prefix scheme for combining variable-size payloads: the
// combined buffer covers 2 prefix bytes plus the longest member payload;
// shorter members are implicitly zero-padded.
inline std::size_t padded_len(std::size_t payload_len) { return payload_len + 2; }

// dst ^= c * (len16_be ++ payload ++ zeros); dst.size() >= payload.size()+2.
void axpy_prefixed(std::span<std::uint8_t> dst, std::uint8_t c,
                   std::span<const std::uint8_t> payload);

// Inverse of the prefix scheme: reads the 2-byte length and extracts the
// payload from a solved combination buffer.
std::vector<std::uint8_t> strip_prefix(std::span<const std::uint8_t> padded);

} // namespace tetrysim
