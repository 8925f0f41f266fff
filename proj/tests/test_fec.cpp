#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <vector>

#include "tetrysim/fec.hpp"
#include "tetrysim/rng.hpp"

using namespace tetrysim;

namespace {

std::vector<std::vector<std::uint8_t>> random_sources(int k, std::size_t lo, std::size_t hi,
                                                      std::uint64_t seed) {
    Xoshiro256ss rng(seed);
    std::vector<std::vector<std::uint8_t>> out(k);
    for (auto& s : out) {
        s.resize(lo + rng.next_below(static_cast<std::uint32_t>(hi - lo + 1)));
        for (auto& b : s) b = static_cast<std::uint8_t>(rng.next_below(256));
    }
    return out;
}

// Erase `erased` packet indices (0..n-1: sources then repairs) and decode.
bool erasure_recovers(const FecBlockConfig& cfg,
                      const std::vector<std::vector<std::uint8_t>>& sources,
                      const std::vector<std::vector<std::uint8_t>>& repairs,
                      std::uint32_t erased_mask) {
    std::vector<std::pair<int, std::vector<std::uint8_t>>> rx_src, rx_rep;
    for (int i = 0; i < cfg.k; ++i)
        if (!(erased_mask & (1u << i))) rx_src.emplace_back(i, sources[i]);
    for (int r = 0; r < cfg.n - cfg.k; ++r)
        if (!(erased_mask & (1u << (cfg.k + r)))) rx_rep.emplace_back(r, repairs[r]);

    const auto rec = fec_decode_block(cfg.k, rx_src, rx_rep);
    for (int i = 0; i < cfg.k; ++i) {
        if (!(erased_mask & (1u << i))) continue;
        bool found = false;
        for (const auto& [col, payload] : rec)
            if (col == i) {
                if (payload != sources[i]) return false;
                found = true;
            }
        if (!found) return false;
    }
    return true;
}

int popcount(std::uint32_t v) {
    int c = 0;
    while (v) {
        c += v & 1;
        v >>= 1;
    }
    return c;
}

} // namespace

TEST_CASE("ladder block shapes") {
    CHECK(fec_rung_config(0).k == 9);
    CHECK(fec_rung_config(0).n == 10);
    CHECK(fec_rung_config(1).k == 8);
    CHECK(fec_rung_config(1).n == 10);
    CHECK(fec_rung_config(2).k == 6);
    CHECK(fec_rung_config(2).n == 9);
    CHECK(fec_rung_config(3).k == 5);
    CHECK(fec_rung_config(3).n == 10);
    CHECK(fec_rung_config(2).redundancy() == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS(fec_rung_config(4));
}

TEST_CASE("repair counts match n-k") {
    CHECK(fec_encode_block(random_sources(9, 4, 9, 1), {9, 10}).size() == 1);
    CHECK(fec_encode_block(random_sources(6, 4, 9, 2), {6, 9}).size() == 3);
}

TEST_CASE("single-source parity repair equals the prefixed source") {
    const auto src = random_sources(1, 5, 5, 3);
    const auto repairs = fec_encode_block(src, {1, 2});
    REQUIRE(repairs.size() == 1);
    CHECK(strip_prefix(repairs[0]) == src[0]);
}

TEST_CASE("mds property, exhaustive erasure subsets for every ladder shape") {
    const std::array<FecBlockConfig, 6> shapes{
        FecBlockConfig{9, 10}, {8, 10}, {6, 9}, {5, 10}, {1, 2}, {7, 10}};
    for (const auto& cfg : shapes) {
        const auto sources = random_sources(cfg.k, 3, 11, 70 + cfg.k);
        const auto repairs = fec_encode_block(sources, cfg);
        for (std::uint32_t mask = 0; mask < (1u << cfg.n); ++mask) {
            const int erased = popcount(mask);
            if (erased == 0 || erased > cfg.n - cfg.k) continue;
            CAPTURE(cfg.k);
            CAPTURE(cfg.n);
            CAPTURE(mask);
            CHECK(erasure_recovers(cfg, sources, repairs, mask));
        }
    }
}

TEST_CASE("two losses defeat the single repair of FEC(9,10)") {
    FecBlockConfig cfg{9, 10};
    const auto sources = random_sources(9, 4, 8, 12);
    const auto repairs = fec_encode_block(sources, cfg);
    std::vector<std::pair<int, std::vector<std::uint8_t>>> rx_src, rx_rep;
    for (int i = 2; i < 9; ++i) rx_src.emplace_back(i, sources[i]); // 0 and 1 lost
    rx_rep.emplace_back(0, repairs[0]);
    CHECK(fec_decode_block(cfg.k, rx_src, rx_rep).empty());
}

TEST_CASE("burst of three consecutive losses recovered by FEC(6,9)") {
    FecBlockConfig cfg{6, 9};
    const auto sources = random_sources(6, 4, 8, 13);
    const auto repairs = fec_encode_block(sources, cfg);
    // Every consecutive-triple erasure position inside the block.
    for (int start = 0; start + 3 <= 6; ++start) {
        const std::uint32_t mask = 0b111u << start;
        CHECK(erasure_recovers(cfg, sources, repairs, mask));
    }
}

TEST_CASE("sequenced encoder emits repairs after the k-th source, block independence") {
    FecEncoder enc({3, 5});
    FecDecoder dec;
    Micros now = 0;
    std::vector<std::vector<std::uint8_t>> sent;
    std::vector<Delivery> dels;
    int repair_idx = 0;
    for (int i = 0; i < 9; ++i) {
        sent.push_back(random_sources(1, 3, 7, 100 + i)[0]);
        const auto pkts = enc.on_source_ready(sent.back(), ++now);
        if ((i + 1) % 3 == 0) {
            REQUIRE(pkts.size() == 3); // source + 2 repairs back-to-back
        } else {
            REQUIRE(pkts.size() == 1);
        }
        for (const auto& p : pkts) {
            // Lose source seq 2 (block 1) and seq 8 (block 3); lose one
            // repair of block 2 entirely: block independence keeps each
            // block decodable on its own.
            if (const auto* s = std::get_if<SourcePacket>(&p); s && (s->seq == 2 || s->seq == 8))
                continue;
            if (std::holds_alternative<RepairPacket>(p) && ++repair_idx == 3) continue;
            auto d = dec.on_packet(p, ++now);
            dels.insert(dels.end(), d.begin(), d.end());
        }
    }
    std::vector<bool> got(10, false);
    for (const auto& d : dels) {
        got[d.seq] = true;
        CHECK(d.payload == sent[d.seq - 1]);
        if (d.seq == 2 || d.seq == 8) CHECK(d.recovered);
    }
    for (int s = 1; s <= 9; ++s) CHECK(got[s]);
    CHECK(dec.stats().blocks_decoded >= 2);
}

TEST_CASE("recovery happens at the k-th received block packet") {
    FecEncoder enc({2, 4});
    FecDecoder dec;
    std::vector<Packet> wire;
    auto srcs = random_sources(2, 4, 4, 55);
    for (const auto& s : srcs)
        for (auto& p : enc.on_source_ready(s, 0)) wire.push_back(std::move(p));
    REQUIRE(wire.size() == 4); // S1 S2 R0 R1

    // S1 lost; S2 arrives at t=10; R0 arrives at t=20 -> decode at t=20.
    dec.on_packet(wire[1], 10);
    const auto d = dec.on_packet(wire[2], 20);
    REQUIRE(d.size() == 1);
    CHECK(d[0].seq == 1);
    CHECK(d[0].delivery_ts == 20);
    CHECK(d[0].payload == srcs[0]);
}

TEST_CASE("adaptive reconfiguration waits for the block boundary") {
    FecEncoder enc({2, 3});
    enc.on_source_ready(random_sources(1, 4, 4, 1)[0], 0);
    enc.set_config({3, 5}); // mid-block: becomes active after this block
    auto pkts = enc.on_source_ready(random_sources(1, 4, 4, 2)[0], 1);
    REQUIRE(pkts.size() == 2); // old (2,3): one repair
    CHECK(std::get<RepairPacket>(pkts[1]).window_n == 3);
    // Next block uses (3,5).
    enc.on_source_ready(random_sources(1, 4, 4, 3)[0], 2);
    enc.on_source_ready(random_sources(1, 4, 4, 4)[0], 3);
    pkts = enc.on_source_ready(random_sources(1, 4, 4, 5)[0], 4);
    REQUIRE(pkts.size() == 3);
    CHECK(std::get<RepairPacket>(pkts[1]).window_n == 5);
}
