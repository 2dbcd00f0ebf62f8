#pragma once

#include <array>
#include <cstdint>

#include "rdrive/errors.hpp"

// GF(2^8) arithmetic with the 0x11D reduction polynomial, shared by the
// Reed-Solomon codec and the secret-sharing scheme. Tables are built at
// compile time; mul() is a single lookup into the full 256x256 product table.
namespace rdrive::gf256 {

inline constexpr unsigned kPolynomial = 0x11D;

namespace detail {

struct ExpLog {
    std::array<uint8_t, 512> exp{};
    std::array<uint8_t, 256> log{};
};

constexpr ExpLog buildExpLog() {
    ExpLog t{};
    unsigned x = 1;
    for (int i = 0; i < 255; ++i) {
        t.exp[static_cast<size_t>(i)] = static_cast<uint8_t>(x);
        t.log[x] = static_cast<uint8_t>(i);
        x <<= 1;
        if (x & 0x100u) x ^= kPolynomial;
    }
    for (int i = 255; i < 512; ++i) t.exp[static_cast<size_t>(i)] = t.exp[static_cast<size_t>(i - 255)];
    return t;
}

inline constexpr ExpLog kExpLog = buildExpLog();

struct MulTable {
    std::array<std::array<uint8_t, 256>, 256> m{};
};

constexpr MulTable buildMulTable() {
    MulTable t{};
    for (int a = 1; a < 256; ++a) {
        for (int b = 1; b < 256; ++b) {
            const int idx = kExpLog.log[static_cast<size_t>(a)] + kExpLog.log[static_cast<size_t>(b)];
            t.m[static_cast<size_t>(a)][static_cast<size_t>(b)] = kExpLog.exp[static_cast<size_t>(idx)];
        }
    }
    return t;
}

inline constexpr MulTable kMulTable = buildMulTable();

}  // namespace detail

inline constexpr uint8_t add(uint8_t a, uint8_t b) { return a ^ b; }
inline constexpr uint8_t sub(uint8_t a, uint8_t b) { return a ^ b; }

inline constexpr uint8_t mul(uint8_t a, uint8_t b) { return detail::kMulTable.m[a][b]; }

// Row of products by a fixed coefficient, for tight encode/decode loops.
inline const uint8_t* mulRow(uint8_t coefficient) { return detail::kMulTable.m[coefficient].data(); }

inline uint8_t inv(uint8_t a) {
    if (a == 0) raise(Errc::InvalidParameters, "no inverse of 0 in GF(256)");
    return detail::kExpLog.exp[static_cast<size_t>(255 - detail::kExpLog.log[a])];
}

inline uint8_t div(uint8_t a, uint8_t b) {
    if (b == 0) raise(Errc::InvalidParameters, "division by 0 in GF(256)");
    if (a == 0) return 0;
    const int idx = detail::kExpLog.log[a] - detail::kExpLog.log[b] + 255;
    return detail::kExpLog.exp[static_cast<size_t>(idx)];
}

inline constexpr uint8_t pow(uint8_t base, unsigned exponent) {
    uint8_t result = 1;
    uint8_t acc = base;
    while (exponent > 0) {
        if (exponent & 1u) result = mul(result, acc);
        acc = mul(acc, acc);
        exponent >>= 1;
    }
    return result;
}

}  // namespace rdrive::gf256
