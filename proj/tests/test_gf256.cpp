#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdint>
#include <vector>

#include "tetrysim/gf256.hpp"
#include "tetrysim/rng.hpp"

using namespace tetrysim;

namespace {

// Independent log/antilog oracle built with plain shift-and-reduce
// multiplication, no shared code with the library tables.
struct Oracle {
    std::array<std::uint8_t, 256> log{};
    std::array<std::uint8_t, 255> alog{};

    static std::uint8_t slow_mul(std::uint8_t a, std::uint8_t b) {
        unsigned acc = 0, aa = a;
        for (int i = 0; i < 8; ++i) {
            if (b & (1u << i)) acc ^= aa << i;
        }
        for (int bit = 15; bit >= 8; --bit)
            if (acc & (1u << bit)) acc ^= 0x11Du << (bit - 8);
        return static_cast<std::uint8_t>(acc);
    }

    Oracle() {
        std::uint8_t x = 1;
        for (int i = 0; i < 255; ++i) {
            alog[i] = x;
            log[x] = static_cast<std::uint8_t>(i);
            x = slow_mul(x, 2);
        }
    }

    std::uint8_t mul(std::uint8_t a, std::uint8_t b) const {
        if (!a || !b) return 0;
        return alog[(log[a] + log[b]) % 255];
    }
};

const Oracle oracle;

} // namespace

TEST_CASE("addition is xor") {
    CHECK(gf::add(0x00, 0x37) == 0x37);
    CHECK(gf::add(0x5A, 0x5A) == 0x00);
    CHECK(gf::add(0x53, 0xCA) == 0x99);
}

TEST_CASE("multiplication basics") {
    for (unsigned a = 0; a < 256; ++a) CHECK(gf::mul(static_cast<std::uint8_t>(a), 0x01) == a);
    CHECK(gf::mul(0x02, 0x02) == 0x04);
    // One reduction step: 0x100 ^ 0x11D.
    CHECK(gf::mul(0x80, 0x02) == 0x1D);
}

TEST_CASE("multiplication matches the log/antilog oracle exhaustively") {
    for (unsigned a = 0; a < 256; ++a)
        for (unsigned b = 0; b < 256; ++b)
            CHECK(gf::mul(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b)) ==
                  oracle.mul(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b)));
}

TEST_CASE("inverses") {
    CHECK(gf::inv(0x01) == 0x01);
    CHECK(gf::mul(0x53, gf::inv(0x53)) == 0x01);
    CHECK_THROWS_AS(gf::inv(0), std::domain_error);
    for (unsigned a = 1; a < 256; ++a) {
        const auto ia = gf::inv(static_cast<std::uint8_t>(a));
        CHECK(gf::mul(static_cast<std::uint8_t>(a), ia) == 0x01);
        CHECK(gf::inv(ia) == a);
    }
}

TEST_CASE("each nonzero element has exactly one inverse") {
    for (unsigned a = 1; a < 256; ++a) {
        int count = 0;
        for (unsigned b = 1; b < 256; ++b)
            if (gf::mul(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b)) == 1) ++count;
        CHECK(count == 1);
    }
}

TEST_CASE("distributivity on random triples") {
    Xoshiro256ss rng(42);
    for (int i = 0; i < 10000; ++i) {
        const auto a = static_cast<std::uint8_t>(rng.next_below(256));
        const auto b = static_cast<std::uint8_t>(rng.next_below(256));
        const auto c = static_cast<std::uint8_t>(rng.next_below(256));
        CHECK(gf::mul(a, gf::add(b, c)) == gf::add(gf::mul(a, b), gf::mul(a, c)));
        CHECK(gf::mul(a, b) == gf::mul(b, a));
        CHECK(gf::mul(gf::mul(a, b), c) == gf::mul(a, gf::mul(b, c)));
    }
}

TEST_CASE("bulk kernels match the serial reference bit-exactly") {
    Xoshiro256ss rng(7);
    for (const std::size_t n : {0UL, 1UL, 7UL, 500UL, 502UL, 4096UL}) {
        std::vector<std::uint8_t> src(n), a(n), b(n);
        for (auto& x : src) x = static_cast<std::uint8_t>(rng.next_below(256));
        for (std::size_t i = 0; i < n; ++i) a[i] = b[i] = static_cast<std::uint8_t>(rng.next_below(256));
        for (const std::uint8_t c : {0, 1, 2, 0x53, 0xFF}) {
            auto ra = a, rb = b;
            gf::axpy(ra, c, src);
            gf::axpy_ref(rb, c, src);
            CHECK(ra == rb);

            auto sa = a, sb = b;
            gf::scal(sa, c);
            gf::scal_ref(sb, c);
            CHECK(sa == sb);
        }
    }
}
