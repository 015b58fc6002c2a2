// gen.hpp — test-matrix generator: entries (rand - 0.5) * exp(randn * phi)
// with rand uniform on (0,1] and randn standard normal. phi controls the
// dynamic range. Entries that round to zero in the working precision are
// redrawn, so generated matrices never contain zero rows or columns.
#pragma once

#include "matrix.hpp"
#include "prng.hpp"

#include <cmath>
#include <cstdint>

namespace oz2 {

template <class T>
Matrix<T> gen_matrix(std::int64_t rows, std::int64_t cols, double phi, std::uint64_t seed) {
    if (phi < 0) throw std::domain_error("gen_matrix: phi must be nonnegative");
    Xoshiro256ss rng(seed);
    Matrix<T> m(rows, cols);
    for (std::int64_t i = 0; i < rows; ++i)
        for (std::int64_t j = 0; j < cols; ++j) {
            T v;
            do {
                const double u = rng.uniform();
                const double g = rng.normal();
                v = static_cast<T>((u - 0.5) * std::exp(g * phi));
            } while (v == T(0) || !std::isfinite(static_cast<double>(v)));
            m(i, j) = v;
        }
    return m;
}

} // namespace oz2
