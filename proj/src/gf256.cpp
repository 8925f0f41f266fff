#include "tetrysim/gf256.hpp"

#include <algorithm>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tetrysim::gf {
namespace detail {

namespace {

constexpr Tables make_tables() {
    Tables t{};
    unsigned b = 1;
    for (unsigned i = 0; i < 255; ++i) {
        t.exp[i] = static_cast<std::uint8_t>(b);
        t.log[b] = static_cast<std::uint8_t>(i);
        b <<= 1;
        if (b & 0x100) b ^= kPoly;
    }
    for (unsigned i = 255; i < 512; ++i) t.exp[i] = t.exp[i - 255];
    t.log[0] = 0; // unused; mul/inv guard zero explicitly
    t.inv[0] = 0;
    for (unsigned a = 1; a < 256; ++a) t.inv[a] = t.exp[255 - t.log[a]];
    return t;
}

constexpr MulTable make_mul_table() {
    MulTable f{};
    const Tables t = make_tables();
    for (unsigned a = 1; a < 256; ++a)
        for (unsigned b = 1; b < 256; ++b)
            f.m[a][b] = t.exp[t.log[a] + t.log[b]];
    return f;
}

} // namespace

const Tables tables = make_tables();
const MulTable mul_table = make_mul_table();

} // namespace detail

std::uint8_t inv(std::uint8_t a) {
    if (a == 0) throw std::domain_error("gf256: inverse of zero");
    return detail::tables.inv[a];
}

void axpy_ref(std::span<std::uint8_t> dst, std::uint8_t c, std::span<const std::uint8_t> src) {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] ^= mul(c, src[i]);
}

void scal_ref(std::span<std::uint8_t> v, std::uint8_t c) {
    for (auto& x : v) x = mul(c, x);
}

namespace {

// Buffers below this size are not worth forking threads for; simulator
// payloads (~0.5 KB) always take the serial path.
constexpr std::size_t kParallelCutoff = 1 << 20;

inline void axpy_rows(std::uint8_t* dst, const std::uint8_t* src, std::size_t n,
                      const std::uint8_t* row) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        dst[i + 0] ^= row[src[i + 0]];
        dst[i + 1] ^= row[src[i + 1]];
        dst[i + 2] ^= row[src[i + 2]];
        dst[i + 3] ^= row[src[i + 3]];
        dst[i + 4] ^= row[src[i + 4]];
        dst[i + 5] ^= row[src[i + 5]];
        dst[i + 6] ^= row[src[i + 6]];
        dst[i + 7] ^= row[src[i + 7]];
    }
    for (; i < n; ++i) dst[i] ^= row[src[i]];
}

} // namespace

void add_bytes(std::span<std::uint8_t> dst, std::span<const std::uint8_t> src) {
    const std::size_t n = src.size();
#ifdef _OPENMP
    if (n >= kParallelCutoff) {
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i) dst[i] ^= src[i];
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) dst[i] ^= src[i];
}

void axpy(std::span<std::uint8_t> dst, std::uint8_t c, std::span<const std::uint8_t> src) {
    if (c == 0) return;
    if (c == 1) { add_bytes(dst, src); return; }
    const std::uint8_t* row = detail::mul_table.m[c];
    const std::size_t n = src.size();
#ifdef _OPENMP
    if (n >= kParallelCutoff) {
#pragma omp parallel
        {
            const int nt = omp_get_num_threads();
            const int id = omp_get_thread_num();
            const std::size_t chunk = (n + nt - 1) / nt;
            const std::size_t lo = std::min(n, chunk * static_cast<std::size_t>(id));
            const std::size_t hi = std::min(n, lo + chunk);
            if (hi > lo) axpy_rows(dst.data() + lo, src.data() + lo, hi - lo, row);
        }
        return;
    }
#endif
    axpy_rows(dst.data(), src.data(), n, row);
}

void scal(std::span<std::uint8_t> v, std::uint8_t c) {
    if (c == 1) return;
    if (c == 0) { std::fill(v.begin(), v.end(), std::uint8_t{0}); return; }
    const std::uint8_t* row = detail::mul_table.m[c];
    for (auto& x : v) x = row[x];
}

} // namespace tetrysim::gf
