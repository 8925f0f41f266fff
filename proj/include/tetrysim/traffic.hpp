#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "tetrysim/packet.hpp"

namespace tetrysim {

class TrafficSource {
public:
    virtual ~TrafficSource() = default;
    // Time of the next emission, nullopt when exhausted.
    virtual std::optional<Micros> next_time() const = 0;
    // Payloads emitted at next_time (one per source packet).
    virtual std::vector<std::vector<std::uint8_t>> take() = 0;
    // Ladder adaptation hook; repairs_per_source is (n-k)/k for the active
    // code. Only the video source reacts.
    virtual void on_rung_change(int /*rung_index*/, double /*redundancy*/,
                                double /*repairs_per_source*/) {}
    // Mean inter-packet interval, feeds the controller's T.
    virtual double nominal_packet_interval_us() const = 0;
};

// Constant bit rate: fixed-size packets, exact long-run spacing.
class CbrSource final : public TrafficSource {
public:
    CbrSource(double rate_kbps, std::size_t packet_size, std::uint64_t packet_count,
              std::uint64_t seed);

    std::optional<Micros> next_time() const override;
    std::vector<std::vector<std::uint8_t>> take() override;
    double nominal_packet_interval_us() const override { return interval_us_; }

private:
    std::size_t packet_size_;
    std::uint64_t count_;
    std::uint64_t emitted_ = 0;
    std::uint64_t seed_;
    double interval_us_;
};

// Encoding rate as a function of the quantization-parameter offset: each +1
// step cuts the rate by gain_per_step, or a per-QP table when provided.
struct VideoRateModel {
    int base_qp = 27;
    double base_rate_kbps = 774.0;
    double gain_per_step = 0.15;
    double frame_rate = 30.0;
    std::vector<std::pair<int, double>> table; // (qp, kb/s), optional

    // Clamps table lookups to the covered QP range.
    double rate_for_offset(int qp_offset) const;
};

// Synthetic variable-rate source: per-frame byte budgets from the rate model
// with a heavier group-start frame and jittered sizes, split at the MTU.
//
// When protection is active the per-rung payload budget is solved from a wire
// model of this packetizer (source headers plus repairs-per-source at the
// max packet size) so that source+repair wire bandwidth never exceeds the
// unprotected baseline's — the ladder's bandwidth-neutrality constraint.
class VideoSource final : public TrafficSource {
public:
    VideoSource(VideoRateModel model, double duration_s, std::size_t mtu, int gop_len,
                double size_jitter, std::uint64_t seed);

    std::optional<Micros> next_time() const override;
    std::vector<std::vector<std::uint8_t>> take() override;
    void on_rung_change(int rung_index, double redundancy,
                        double repairs_per_source) override;
    double nominal_packet_interval_us() const override;

    double effective_rate_kbps() const { return effective_rate_kbps_; }
    // Estimated sender wire rate (source + repair) at the current rung.
    double estimated_wire_kbps() const;
    // Wire rate of the unprotected baseline (the neutrality budget).
    double baseline_wire_kbps() const { return baseline_wire_kbps_; }

private:
    double mean_payload_len(double payload_rate_kbps) const;
    double wire_kbps(double payload_rate_kbps, double repairs_per_source) const;

    VideoRateModel model_;
    std::uint64_t frames_total_;
    std::size_t mtu_;
    int gop_len_;
    double jitter_;
    std::uint64_t seed_;
    double baseline_wire_kbps_;
    double effective_rate_kbps_;
    double repairs_per_source_ = 0.0;
    std::uint64_t frame_ = 0;
};

// Deterministic payload bytes for stream seed + packet ordinal.
std::vector<std::uint8_t> synth_payload(std::uint64_t seed, std::uint64_t ordinal,
                                        std::size_t size);

} // namespace tetrysim
