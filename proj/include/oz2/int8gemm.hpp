// int8gemm.hpp — software model of an INT8 matrix engine: 8-bit signed
// inputs, 32-bit signed accumulation with two's-complement wraparound.
#pragma once

#include "matrix.hpp"
#include "parallel.hpp"

#include <cstdint>

namespace oz2 {

inline constexpr std::int64_t kMaxInnerDim = 1ll << 17;

// Each output entry is the exact integer dot product reduced mod 2^32 into
// [-2^31, 2^31). Accumulation order is h = 0..k-1 (order does not affect the
// wrapped result; fixed for documentation).
inline MatrixI32 gemm_i8_wrap(const MatrixI8& a, const MatrixI8& b) {
    require_dims(a.cols() == b.rows(), "gemm_i8_wrap inner dimension");
    if (a.cols() > kMaxInnerDim) throw std::domain_error("gemm_i8_wrap: k exceeds 2^17");
    const std::int64_t m = a.rows(), k = a.cols(), n = b.cols();
    MatrixI32 c(m, n);
    parallel_for(m, [&](std::int64_t i) {
        for (std::int64_t j = 0; j < n; ++j) {
            std::uint32_t acc = 0;
            for (std::int64_t h = 0; h < k; ++h) {
                const std::int32_t prod = static_cast<std::int32_t>(a(i, h)) *
                                          static_cast<std::int32_t>(b(h, j));
                acc += static_cast<std::uint32_t>(prod);
            }
            c(i, j) = static_cast<std::int32_t>(acc);       // C++20: modular wrap
        }
    });
    return c;
}

} // namespace oz2
