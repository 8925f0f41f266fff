#include "tetrysim/packet.hpp"

#include <stdexcept>

#include "tetrysim/gf256.hpp"
#include "tetrysim/rng.hpp"

namespace tetrysim {

namespace {

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

struct Reader {
    std::span<const std::uint8_t> b;
    std::size_t at = 0;
    std::uint8_t u8() { need(1); return b[at++]; }
    std::uint16_t u16() { need(2); auto v = std::uint16_t((b[at] << 8) | b[at + 1]); at += 2; return v; }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | b[at++];
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | b[at++];
        return v;
    }
    std::vector<std::uint8_t> bytes(std::size_t n) {
        need(n);
        std::vector<std::uint8_t> v(b.begin() + at, b.begin() + at + n);
        at += n;
        return v;
    }
    void need(std::size_t n) const {
        if (at + n > b.size()) throw std::runtime_error("packet: truncated buffer");
    }
};

constexpr std::size_t kSourceHeader = 1 + 4 + 8 + 2;
constexpr std::size_t kRepairHeader = 1 + 4 + 4 + 8 + 8 + 1 + 4 + 2;
constexpr std::size_t kAckHeaderBase = 1 + 4 + 8 + 1;
constexpr std::size_t kAckFeedback = 4 + 1;

} // namespace

std::vector<std::uint8_t> serialize(const Packet& p) {
    std::vector<std::uint8_t> out;
    out.reserve(wire_size(p));
    if (const auto* s = std::get_if<SourcePacket>(&p)) {
        put_u8(out, 'S');
        put_u32(out, s->seq);
        put_u64(out, static_cast<std::uint64_t>(s->send_ts));
        put_u16(out, static_cast<std::uint16_t>(s->payload.size()));
        out.insert(out.end(), s->payload.begin(), s->payload.end());
    } else if (const auto* r = std::get_if<RepairPacket>(&p)) {
        put_u8(out, 'R');
        put_u32(out, r->first_seq);
        put_u32(out, r->last_seq);
        put_u64(out, r->coeff_seed);
        put_u64(out, static_cast<std::uint64_t>(r->send_ts));
        put_u8(out, r->window_n);
        put_u32(out, r->applied_request_id);
        put_u16(out, static_cast<std::uint16_t>(r->combined.size()));
        out.insert(out.end(), r->combined.begin(), r->combined.end());
    } else {
        const auto& a = std::get<AckPacket>(p);
        put_u8(out, 'A');
        put_u32(out, a.cumulative_seq);
        put_u64(out, static_cast<std::uint64_t>(a.send_ts));
        put_u8(out, a.feedback ? 1 : 0);
        if (a.feedback) {
            put_u32(out, a.feedback->request_id);
            put_u8(out, static_cast<std::uint8_t>(a.feedback->direction));
        }
    }
    return out;
}

Packet deserialize(std::span<const std::uint8_t> bytes) {
    Reader rd{bytes};
    switch (rd.u8()) {
    case 'S': {
        SourcePacket s;
        s.seq = rd.u32();
        s.send_ts = static_cast<Micros>(rd.u64());
        s.payload = rd.bytes(rd.u16());
        return s;
    }
    case 'R': {
        RepairPacket r;
        r.first_seq = rd.u32();
        r.last_seq = rd.u32();
        r.coeff_seed = rd.u64();
        r.send_ts = static_cast<Micros>(rd.u64());
        r.window_n = rd.u8();
        r.applied_request_id = rd.u32();
        r.combined = rd.bytes(rd.u16());
        return r;
    }
    case 'A': {
        AckPacket a;
        a.cumulative_seq = rd.u32();
        a.send_ts = static_cast<Micros>(rd.u64());
        if (rd.u8()) {
            RedundancyFeedback fb;
            fb.request_id = rd.u32();
            fb.direction = static_cast<FeedbackDirection>(rd.u8());
            a.feedback = fb;
        }
        return a;
    }
    default:
        throw std::runtime_error("packet: unknown type byte");
    }
}

std::size_t wire_size(const Packet& p) {
    if (const auto* s = std::get_if<SourcePacket>(&p)) return kSourceHeader + s->payload.size();
    if (const auto* r = std::get_if<RepairPacket>(&p)) return kRepairHeader + r->combined.size();
    const auto& a = std::get<AckPacket>(p);
    return kAckHeaderBase + (a.feedback ? kAckFeedback : 0);
}

std::vector<std::uint8_t> repair_coefficients(std::uint64_t seed,
                                              std::uint32_t first_seq,
                                              std::uint32_t last_seq) {
    Xoshiro256ss rng(mix_seed(seed, (std::uint64_t(first_seq) << 32) | last_seq));
    std::vector<std::uint8_t> coeffs(last_seq - first_seq + 1);
    for (auto& c : coeffs) c = static_cast<std::uint8_t>(1 + rng.next_below(255));
    return coeffs;
}

void axpy_prefixed(std::span<std::uint8_t> dst, std::uint8_t c,
                   std::span<const std::uint8_t> payload) {
    const std::uint8_t prefix[2] = {
        static_cast<std::uint8_t>(payload.size() >> 8),
        static_cast<std::uint8_t>(payload.size() & 0xFF),
    };
    gf::axpy(dst.first(2), c, prefix);
    gf::axpy(dst.subspan(2), c, payload);
}

std::vector<std::uint8_t> strip_prefix(std::span<const std::uint8_t> padded) {
    if (padded.size() < 2) throw std::runtime_error("packet: combination too short");
    const std::size_t len = (std::size_t(padded[0]) << 8) | padded[1];
    if (len + 2 > padded.size()) throw std::runtime_error("packet: corrupt length prefix");
    return {padded.begin() + 2, padded.begin() + 2 + len};
}

} // namespace tetrysim
