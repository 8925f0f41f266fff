#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

// GF(2^8) arithmetic with reduction polynomial x^8+x^4+x^3+x^2+1 (0x11D),
// generator 2. The log/antilog tables are the reference implementation;
// the bulk kernels below must match them bit-exactly (checked in tests).

namespace tetrysim::gf {

inline constexpr unsigned kPoly = 0x11D;

namespace detail {
struct Tables {
    std::uint8_t log[256];
    std::uint8_t exp[512]; // doubled so mul() needs no modulo
    std::uint8_t inv[256];
};
struct MulTable {
    std::uint8_t m[256][256];
};
extern const Tables tables;
extern const MulTable mul_table;
} // namespace detail

constexpr std::uint8_t add(std::uint8_t a, std::uint8_t b) { return a ^ b; }

inline std::uint8_t mul(std::uint8_t a, std::uint8_t b) {
    if (a == 0 || b == 0) return 0;
    return detail::tables.exp[detail::tables.log[a] + detail::tables.log[b]];
}

// Precondition: a != 0 (domain error otherwise).
std::uint8_t inv(std::uint8_t a);

inline std::uint8_t div(std::uint8_t a, std::uint8_t b) { return mul(a, inv(b)); }

// Bulk primitives over byte buffers, dst ^= c * src elementwise.
// Preconditions require src.size() <= dst.size(); the extra dst tail is
// untouched (equivalent to zero-padding src).
//
// *_ref are the element-wise log/antilog reference kept for testing; the
// unsuffixed kernels use the 64K product table, unrolled, and split large
// buffers across OpenMP threads.
void axpy_ref(std::span<std::uint8_t> dst, std::uint8_t c, std::span<const std::uint8_t> src);
void axpy(std::span<std::uint8_t> dst, std::uint8_t c, std::span<const std::uint8_t> src);

void scal_ref(std::span<std::uint8_t> v, std::uint8_t c);
void scal(std::span<std::uint8_t> v, std::uint8_t c);

// dst ^= src (c == 1 fast path).
void add_bytes(std::span<std::uint8_t> dst, std::span<const std::uint8_t> src);

} // namespace tetrysim::gf
