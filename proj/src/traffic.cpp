#include "tetrysim/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tetrysim/rng.hpp"

namespace tetrysim {

namespace {
// Canonical wire header sizes (see packet.cpp).
constexpr double kSourceHeader = 15.0;
constexpr double kRepairHeader = 32.0;
} // namespace

std::vector<std::uint8_t> synth_payload(std::uint64_t seed, std::uint64_t ordinal,
                                        std::size_t size) {
    std::vector<std::uint8_t> out(size);
    std::uint64_t s = mix_seed(seed, ordinal);
    std::size_t i = 0;
    while (i < size) {
        std::uint64_t w = splitmix64(s);
        for (int b = 0; b < 8 && i < size; ++b, ++i) {
            out[i] = static_cast<std::uint8_t>(w);
            w >>= 8;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// CBR

CbrSource::CbrSource(double rate_kbps, std::size_t packet_size, std::uint64_t packet_count,
                     std::uint64_t seed)
    : packet_size_(packet_size), count_(packet_count), seed_(seed) {
    if (rate_kbps <= 0.0 || packet_size == 0)
        throw std::invalid_argument("cbr: rate and packet size must be positive");
    interval_us_ = static_cast<double>(packet_size) * 8000.0 / rate_kbps;
}

std::optional<Micros> CbrSource::next_time() const {
    if (emitted_ >= count_) return std::nullopt;
    return static_cast<Micros>(std::llround(static_cast<double>(emitted_) * interval_us_));
}

std::vector<std::vector<std::uint8_t>> CbrSource::take() {
    std::vector<std::vector<std::uint8_t>> out;
    out.push_back(synth_payload(seed_, emitted_, packet_size_));
    ++emitted_;
    return out;
}

// ---------------------------------------------------------------------------
// Video

double VideoRateModel::rate_for_offset(int qp_offset) const {
    if (!table.empty()) {
        const int qp = base_qp + qp_offset;
        double best = table.front().second;
        int best_qp = table.front().first;
        for (const auto& [tqp, rate] : table) {
            if (std::abs(tqp - qp) < std::abs(best_qp - qp)) {
                best_qp = tqp;
                best = rate;
            }
        }
        return best; // clamped to nearest covered QP
    }
    return base_rate_kbps * std::pow(1.0 - gain_per_step, qp_offset);
}

VideoSource::VideoSource(VideoRateModel model, double duration_s, std::size_t mtu, int gop_len,
                         double size_jitter, std::uint64_t seed)
    : model_(std::move(model)),
      frames_total_(static_cast<std::uint64_t>(std::llround(duration_s * model_.frame_rate))),
      mtu_(mtu),
      gop_len_(gop_len),
      jitter_(size_jitter),
      seed_(seed) {
    if (mtu_ < 64) throw std::invalid_argument("video: mtu too small");
    if (gop_len_ < 1) throw std::invalid_argument("video: gop length must be >= 1");
    if (jitter_ < 0.0 || jitter_ >= 1.0)
        throw std::invalid_argument("video: jitter must be in [0, 1)");
    const double base = model_.rate_for_offset(0);
    baseline_wire_kbps_ = wire_kbps(base, 0.0);
    effective_rate_kbps_ = base; // unprotected until a rung is announced
}

double VideoSource::mean_payload_len(double payload_rate_kbps) const {
    // Expected payload length of this packetizer at the given rate: average
    // over one frame group and a grid of jitter quantiles.
    const double frame_budget = payload_rate_kbps * 1000.0 / 8.0 / model_.frame_rate;
    double bytes = 0.0, pkts = 0.0;
    for (int f = 0; f < gop_len_; ++f) {
        double weight = 1.0;
        if (gop_len_ > 4)
            weight = (f == 0) ? 4.0
                              : (static_cast<double>(gop_len_) - 4.0) /
                                    (static_cast<double>(gop_len_) - 1.0);
        for (int q = 0; q < 9; ++q) {
            const double jit = 1.0 - jitter_ + 2.0 * jitter_ * (q + 0.5) / 9.0;
            const double fb = std::max(32.0, std::round(frame_budget * weight * jit));
            bytes += fb;
            pkts += std::ceil(fb / static_cast<double>(mtu_));
        }
    }
    return bytes / pkts;
}

double VideoSource::wire_kbps(double payload_rate_kbps, double repairs_per_source) const {
    const double avg_len = mean_payload_len(payload_rate_kbps);
    const double pkts_per_s = payload_rate_kbps * 1000.0 / 8.0 / avg_len;
    // Repairs combine the whole window, so they carry the largest padded
    // payload in it; the MTU is the conservative bound.
    const double repair_wire = static_cast<double>(mtu_) + 2.0 + kRepairHeader;
    return payload_rate_kbps + pkts_per_s * (kSourceHeader + repairs_per_source * repair_wire) *
                                   8.0 / 1000.0;
}

void VideoSource::on_rung_change(int rung_index, double redundancy,
                                 double repairs_per_source) {
    (void)redundancy;
    repairs_per_source_ = repairs_per_source;
    const double model_rate = model_.rate_for_offset(rung_index);
    // Largest payload budget whose estimated wire rate stays within the
    // unprotected baseline. The wire model is monotone in the budget but
    // steps at packet-count boundaries, so bisect on the feasibility
    // predicate instead of iterating a fixed point.
    double lo = 1.0, hi = model_.rate_for_offset(0);
    if (wire_kbps(hi, repairs_per_source) <= baseline_wire_kbps_) {
        lo = hi;
    } else {
        for (int it = 0; it < 50; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (wire_kbps(mid, repairs_per_source) <= baseline_wire_kbps_) lo = mid;
            else hi = mid;
        }
    }
    effective_rate_kbps_ = std::min(model_rate, lo);
}

std::optional<Micros> VideoSource::next_time() const {
    if (frame_ >= frames_total_) return std::nullopt;
    return static_cast<Micros>(
        std::llround(static_cast<double>(frame_) * 1e6 / model_.frame_rate));
}

double VideoSource::nominal_packet_interval_us() const {
    return 1e6 / model_.frame_rate /
           std::max(1.0, (effective_rate_kbps_ * 1000.0 / 8.0 / model_.frame_rate) /
                             mean_payload_len(effective_rate_kbps_));
}

double VideoSource::estimated_wire_kbps() const {
    return wire_kbps(effective_rate_kbps_, repairs_per_source_);
}

std::vector<std::vector<std::uint8_t>> VideoSource::take() {
    const std::uint64_t f = frame_++;
    // Group-start frames carry x4 the bytes; others are scaled so the mean
    // over a group stays at the budget.
    const double base_budget = effective_rate_kbps_ * 1000.0 / 8.0 / model_.frame_rate;
    double weight = 1.0;
    if (gop_len_ > 4) {
        weight = (f % static_cast<std::uint64_t>(gop_len_) == 0)
                     ? 4.0
                     : (static_cast<double>(gop_len_) - 4.0) /
                           (static_cast<double>(gop_len_) - 1.0);
    }
    Xoshiro256ss rng(mix_seed(seed_, f + 1));
    const double jitter_mult = 1.0 - jitter_ + 2.0 * jitter_ * rng.next_double();
    const std::size_t frame_bytes = std::max<std::size_t>(
        32, static_cast<std::size_t>(std::llround(base_budget * weight * jitter_mult)));

    const std::size_t npkts = (frame_bytes + mtu_ - 1) / mtu_;
    std::vector<std::vector<std::uint8_t>> out;
    out.reserve(npkts);
    std::size_t remaining = frame_bytes;
    for (std::size_t i = 0; i < npkts; ++i) {
        const std::size_t chunk = std::min(mtu_, remaining - (npkts - 1 - i));
        out.push_back(synth_payload(seed_, (f << 12) | i, std::max<std::size_t>(1, chunk)));
        remaining -= out.back().size();
    }
    return out;
}

} // namespace tetrysim
