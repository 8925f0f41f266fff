#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tetrysim/packet.hpp"
#include "tetrysim/rng.hpp"

using namespace tetrysim;

namespace {

Packet random_packet(Xoshiro256ss& rng) {
    const auto payload = [&](std::size_t n) {
        std::vector<std::uint8_t> v(n);
        for (auto& x : v) x = static_cast<std::uint8_t>(rng.next_below(256));
        return v;
    };
    switch (rng.next_below(3)) {
    case 0: {
        SourcePacket s;
        s.seq = rng.next_below(100000) + 1;
        s.send_ts = static_cast<Micros>(rng.next_below(1 << 30));
        s.payload = payload(rng.next_below(1400));
        return s;
    }
    case 1: {
        RepairPacket r;
        r.first_seq = rng.next_below(50000) + 1;
        r.last_seq = r.first_seq + rng.next_below(100);
        r.coeff_seed = rng.next();
        r.send_ts = static_cast<Micros>(rng.next_below(1 << 30));
        r.window_n = static_cast<std::uint8_t>(rng.next_below(255) + 1);
        r.applied_request_id = rng.next_below(1000);
        r.combined = payload(rng.next_below(1400) + 2);
        return r;
    }
    default: {
        AckPacket a;
        a.cumulative_seq = rng.next_below(100000);
        a.send_ts = static_cast<Micros>(rng.next_below(1 << 30));
        if (rng.next_below(2)) {
            RedundancyFeedback fb;
            fb.request_id = rng.next_below(1000) + 1;
            fb.direction = rng.next_below(2) ? FeedbackDirection::Increase
                                             : FeedbackDirection::Decrease;
            a.feedback = fb;
        }
        return a;
    }
    }
}

bool equal(const Packet& a, const Packet& b) {
    if (a.index() != b.index()) return false;
    if (const auto* s = std::get_if<SourcePacket>(&a)) {
        const auto& t = std::get<SourcePacket>(b);
        return s->seq == t.seq && s->send_ts == t.send_ts && s->payload == t.payload;
    }
    if (const auto* r = std::get_if<RepairPacket>(&a)) {
        const auto& t = std::get<RepairPacket>(b);
        return r->first_seq == t.first_seq && r->last_seq == t.last_seq &&
               r->coeff_seed == t.coeff_seed && r->send_ts == t.send_ts &&
               r->window_n == t.window_n && r->applied_request_id == t.applied_request_id &&
               r->combined == t.combined;
    }
    const auto& x = std::get<AckPacket>(a);
    const auto& y = std::get<AckPacket>(b);
    return x.cumulative_seq == y.cumulative_seq && x.send_ts == y.send_ts &&
           x.feedback == y.feedback;
}

} // namespace

TEST_CASE("serialize/deserialize round trip and wire size agree") {
    Xoshiro256ss rng(11);
    for (int i = 0; i < 500; ++i) {
        const Packet p = random_packet(rng);
        const auto bytes = serialize(p);
        CHECK(bytes.size() == wire_size(p));
        CHECK(equal(deserialize(bytes), p));
    }
}

TEST_CASE("repair coefficients are deterministic, nonzero, in range") {
    const auto a = repair_coefficients(12345, 10, 60);
    const auto b = repair_coefficients(12345, 10, 60);
    CHECK(a == b);
    CHECK(a.size() == 51);
    for (const auto c : a) CHECK(c >= 1);
    // Different windows or seeds give different draws.
    CHECK(repair_coefficients(12345, 10, 61) != a);
    CHECK(repair_coefficients(12346, 10, 60) != a);
}

TEST_CASE("length prefix survives combination with coefficient one") {
    std::vector<std::uint8_t> payload{1, 2, 3, 4, 5};
    std::vector<std::uint8_t> buf(padded_len(8), 0);
    axpy_prefixed(buf, 1, payload);
    const auto back = strip_prefix(buf);
    CHECK(back == payload);
}

TEST_CASE("corrupt length prefix is rejected") {
    std::vector<std::uint8_t> buf{0xFF, 0xFF, 1, 2};
    CHECK_THROWS(strip_prefix(buf));
}
