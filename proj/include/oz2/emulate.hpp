// emulate.hpp — the user-facing GEMM emulation: scaling, CRT over the INT8
// engine, and the inverse diagonal scaling back to the working precision.
#pragma once

#include "crt.hpp"
#include "matrix.hpp"
#include "moduli.hpp"
#include "scaling.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <type_traits>

namespace oz2 {

template <class T>
struct EmulationResult {
    Matrix<T> C;
    ScalingOutput scaling;
    CrtIntermediates crt;
    const ModuliTable* table = nullptr;
    bool subnormal = false;      // some output passed through the subnormal range
};

namespace detail {

// C = fl(diag(2^-mu) C'' diag(2^-nu)) as two successive power-of-two
// scalings; each is exact outside the subnormal range.
template <class T, class TC>
Matrix<T> inverse_scale(const Matrix<TC>& cpp, const std::vector<std::int16_t>& mu,
                        const std::vector<std::int16_t>& nu, bool& subnormal) {
    Matrix<T> c(cpp.rows(), cpp.cols());
    const T min_normal = std::numeric_limits<T>::min();
    for (std::int64_t i = 0; i < cpp.rows(); ++i)
        for (std::int64_t j = 0; j < cpp.cols(); ++j) {
            const T x = std::ldexp(static_cast<T>(cpp(i, j)), -mu[static_cast<std::size_t>(i)]);
            const T y = std::ldexp(x, -nu[static_cast<std::size_t>(j)]);
            if (!std::isfinite(y) || !std::isfinite(x))
                throw std::range_error("os_ii: inverse scaling overflow");
            if ((x != 0 && std::abs(x) < min_normal) || (y != 0 && std::abs(y) < min_normal))
                subnormal = true;
            c(i, j) = y;
        }
    return c;
}

} // namespace detail

// OS_II: C ~ A*B via the CRT using the INT8 engine model.
// Preconditions: compatible dims, k <= 2^17, 2 <= N <= 49, no zero row of A
// or zero column of B. In fp32 mode, N beyond fp32_safe_moduli_max() raises a
// range error from the final reduction once single(C'') overflows.
template <class T>
EmulationResult<T> os_ii(const Matrix<T>& a, const Matrix<T>& b, int n,
                         bool keep_intermediates = false) {
    static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
    require_dims(a.cols() == b.rows(), "os_ii inner dimension");
    if (a.cols() > kMaxInnerDim) throw std::domain_error("os_ii: k exceeds 2^17");

    const ModuliTable& table = table_for(n, prec_of<T>);
    EmulationResult<T> result;
    result.table = &table;
    result.scaling = scale_matrices(a, b, table);
    result.crt = run_crt(result.scaling.Aprime, result.scaling.Bprime, table);

    if constexpr (std::is_same_v<T, float>) {
        result.C = detail::inverse_scale<float>(result.crt.Cpp32, result.scaling.mu,
                                                result.scaling.nu, result.subnormal);
    } else {
        result.C = detail::inverse_scale<double>(result.crt.Cpp64, result.scaling.mu,
                                                 result.scaling.nu, result.subnormal);
    }

    if (!keep_intermediates) {
        result.crt.W.clear();
        result.crt.C1 = {};
        result.crt.C2 = {};
        result.crt.Q = {};
        result.crt.Cpp64 = {};
        result.crt.Cpp32 = {};
        result.scaling.Aprime = {};
        result.scaling.Bprime = {};
        result.scaling.Cbar = {};
        result.scaling.Dbar = {};
    }
    return result;
}

} // namespace oz2
