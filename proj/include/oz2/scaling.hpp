// scaling.hpp — determination of the scaling vectors mu, nu and the truncated
// integer matrices A', B' with 2|A'||B'| < P elementwise.
//
// A' and B' are integer-valued and are held in fp64 storage in both modes:
// every fp32 value is exactly an fp64 value, and trunc(2^mu * a) always has at
// most 53 significant bits, so the fp64 matrix carries the exact integers.
#pragma once

#include "int8gemm.hpp"
#include "matrix.hpp"
#include "moduli.hpp"
#include "softfp.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace oz2 {

struct ScalingOutput {
    Matrix<double> Aprime;            // m x k, exact integers
    Matrix<double> Bprime;            // k x n, exact integers
    std::vector<std::int16_t> mu, nu;
    std::vector<std::int16_t> mu_prime, nu_prime;
    MatrixI32 Cbar;                   // clearance product Abar * Bbar (exact)
    MatrixF32 Dbar;                   // round-up of Cbar
    std::vector<float> e, f;          // log2f of Dbar row/col maxima
};

namespace detail {

template <class T>
double row_abs_max(const Matrix<T>& a, std::int64_t i) {
    double mx = 0;
    for (std::int64_t h = 0; h < a.cols(); ++h) {
        const double v = std::abs(static_cast<double>(a(i, h)));
        if (!std::isfinite(v)) throw std::domain_error("matrix entry is not finite");
        mx = std::max(mx, v);
    }
    return mx;
}

template <class T>
double col_abs_max(const Matrix<T>& b, std::int64_t j) {
    double mx = 0;
    for (std::int64_t h = 0; h < b.rows(); ++h) {
        const double v = std::abs(static_cast<double>(b(h, j)));
        if (!std::isfinite(v)) throw std::domain_error("matrix entry is not finite");
        mx = std::max(mx, v);
    }
    return mx;
}

inline std::int16_t to_i16_checked(long v, const char* what) {
    if (v < -32768 || v > 32767) throw std::range_error(std::string(what) + ": exceeds 16-bit range");
    return static_cast<std::int16_t>(v);
}

// ceil(2^sft * |a|) computed exactly in integer arithmetic; the power-of-two
// scaling never rounds, even when 2^sft*|a| would be subnormal in FP.
inline std::int8_t ceil_abs_scaled(double a, int sft) {
    if (a == 0.0) return 0;
    int e;
    const double f = std::frexp(std::abs(a), &e);
    const std::uint64_t mant = static_cast<std::uint64_t>(std::ldexp(f, 53));
    const long exp2 = static_cast<long>(e) - 53 + sft;
    if (exp2 >= 0) throw std::logic_error("ceil_abs_scaled: entry above row/column max");
    const long s = -exp2;
    std::uint64_t v;
    if (s >= 53) {
        v = 1;                                               // 0 < 2^sft*|a| < 1
    } else {
        const std::uint64_t q = mant >> s;
        const std::uint64_t rem = mant & ((std::uint64_t{1} << s) - 1);
        v = q + (rem != 0 ? 1 : 0);
    }
    if (v > 64) throw std::logic_error("ceil_abs_scaled: value above 2^6");
    return static_cast<std::int8_t>(v);
}

} // namespace detail

// mu'_i = 5 - floor(log2 max_h |a_ih|), by exact exponent extraction.
// Rejects all-zero rows (excluded trivial case).
template <class T>
std::vector<std::int16_t> row_pre_exponents(const Matrix<T>& a) {
    std::vector<std::int16_t> mu_prime(static_cast<std::size_t>(a.rows()));
    for (std::int64_t i = 0; i < a.rows(); ++i) {
        const double mx = detail::row_abs_max(a, i);
        if (mx == 0.0) throw std::domain_error("row_pre_exponents: zero row " + std::to_string(i));
        mu_prime[static_cast<std::size_t>(i)] =
            detail::to_i16_checked(5l - std::ilogb(mx), "mu_prime");
    }
    return mu_prime;
}

template <class T>
std::vector<std::int16_t> col_pre_exponents(const Matrix<T>& b) {
    std::vector<std::int16_t> nu_prime(static_cast<std::size_t>(b.cols()));
    for (std::int64_t j = 0; j < b.cols(); ++j) {
        const double mx = detail::col_abs_max(b, j);
        if (mx == 0.0) throw std::domain_error("col_pre_exponents: zero column " + std::to_string(j));
        nu_prime[static_cast<std::size_t>(j)] =
            detail::to_i16_checked(5l - std::ilogb(mx), "nu_prime");
    }
    return nu_prime;
}

// Abar = ceil(diag(2^mu') |A|), entries in [0, 2^6].
template <class T>
MatrixI8 ceil_abs_scale_rows(const Matrix<T>& a, const std::vector<std::int16_t>& mu_prime) {
    MatrixI8 abar(a.rows(), a.cols());
    parallel_for(a.rows(), [&](std::int64_t i) {
        const int sft = mu_prime[static_cast<std::size_t>(i)];
        for (std::int64_t h = 0; h < a.cols(); ++h)
            abar(i, h) = detail::ceil_abs_scaled(static_cast<double>(a(i, h)), sft);
    });
    return abar;
}

// Bbar = ceil(|B| diag(2^nu')), entries in [0, 2^6].
template <class T>
MatrixI8 ceil_abs_scale_cols(const Matrix<T>& b, const std::vector<std::int16_t>& nu_prime) {
    MatrixI8 bbar(b.rows(), b.cols());
    parallel_for(b.rows(), [&](std::int64_t h) {
        for (std::int64_t j = 0; j < b.cols(); ++j)
            bbar(h, j) = detail::ceil_abs_scaled(static_cast<double>(b(h, j)),
                                                 nu_prime[static_cast<std::size_t>(j)]);
    });
    return bbar;
}

struct ClearanceProduct {
    MatrixI32 Cbar;
    MatrixF32 Dbar;
};

// Cbar = Abar*Bbar on the INT8 engine (exact: entries <= 2^12 k <= 2^29);
// Dbar = round-up of Cbar to fp32, so Dbar >= Cbar.
inline ClearanceProduct clearance_product(const MatrixI8& abar, const MatrixI8& bbar) {
    ClearanceProduct out;
    out.Cbar = gemm_i8_wrap(abar, bbar);
    out.Dbar = MatrixF32(out.Cbar.rows(), out.Cbar.cols());
    for (std::int64_t i = 0; i < out.Cbar.rows(); ++i)
        for (std::int64_t j = 0; j < out.Cbar.cols(); ++j)
            out.Dbar(i, j) = fp32_round_up(out.Cbar(i, j));
    return out;
}

struct ScalingExponents {
    std::vector<std::int16_t> mu, nu;
    std::vector<float> e, f;
};

// mu_i = mu'_i + floor(fma_down(single_down(-0.5/(1-4u32)), e_i, P')) with
// e_i = log2f(max_h dbar_ih); a zero Dbar row/column is clamped to 1 (the
// corresponding exact product row/column is identically zero, so any scaling
// is valid).
inline ScalingExponents scaling_exponents(const MatrixF32& dbar,
                                          const std::vector<std::int16_t>& mu_prime,
                                          const std::vector<std::int16_t>& nu_prime,
                                          float p_prime) {
    static const float coeff = scaling_coeff_fp32();
    ScalingExponents out;
    out.e.resize(static_cast<std::size_t>(dbar.rows()));
    out.f.resize(static_cast<std::size_t>(dbar.cols()));
    out.mu.resize(out.e.size());
    out.nu.resize(out.f.size());

    auto shift_from = [&](float emax) {
        const float inner = fma_fp32(coeff, emax, p_prime, Rnd::Down);
        return static_cast<long>(std::floor(inner));
    };

    for (std::int64_t i = 0; i < dbar.rows(); ++i) {
        float mx = 1.0f;
        for (std::int64_t j = 0; j < dbar.cols(); ++j) mx = std::max(mx, dbar(i, j));
        const float ei = log2_fp32(mx);
        if (!(ei < 31.0f)) throw std::logic_error("scaling_exponents: e_i >= 31");
        out.e[static_cast<std::size_t>(i)] = ei;
        out.mu[static_cast<std::size_t>(i)] = detail::to_i16_checked(
            static_cast<long>(mu_prime[static_cast<std::size_t>(i)]) + shift_from(ei), "mu");
    }
    for (std::int64_t j = 0; j < dbar.cols(); ++j) {
        float mx = 1.0f;
        for (std::int64_t i = 0; i < dbar.rows(); ++i) mx = std::max(mx, dbar(i, j));
        const float fj = log2_fp32(mx);
        if (!(fj < 31.0f)) throw std::logic_error("scaling_exponents: f_j >= 31");
        out.f[static_cast<std::size_t>(j)] = fj;
        out.nu[static_cast<std::size_t>(j)] = detail::to_i16_checked(
            static_cast<long>(nu_prime[static_cast<std::size_t>(j)]) + shift_from(fj), "nu");
    }
    return out;
}

// A' = trunc(diag(2^mu) A), exact in fp64 storage. The power-of-two scaling
// is exact unless it overflows (error) or underflows below 1 in magnitude, in
// which case trunc is 0 either way.
template <class T>
Matrix<double> truncate_scaled_rows(const Matrix<T>& a, const std::vector<std::int16_t>& mu) {
    Matrix<double> ap(a.rows(), a.cols());
    parallel_for(a.rows(), [&](std::int64_t i) {
        const int sft = mu[static_cast<std::size_t>(i)];
        for (std::int64_t h = 0; h < a.cols(); ++h) {
            const double scaled = std::ldexp(static_cast<double>(a(i, h)), sft);
            if (!std::isfinite(scaled)) throw std::range_error("truncate_scaled: 2^mu*a overflow");
            ap(i, h) = std::trunc(scaled);
        }
    });
    return ap;
}

template <class T>
Matrix<double> truncate_scaled_cols(const Matrix<T>& b, const std::vector<std::int16_t>& nu) {
    Matrix<double> bp(b.rows(), b.cols());
    parallel_for(b.rows(), [&](std::int64_t h) {
        for (std::int64_t j = 0; j < b.cols(); ++j) {
            const double scaled = std::ldexp(static_cast<double>(b(h, j)),
                                             nu[static_cast<std::size_t>(j)]);
            if (!std::isfinite(scaled)) throw std::range_error("truncate_scaled: b*2^nu overflow");
            bp(h, j) = std::trunc(scaled);
        }
    });
    return bp;
}

// Full Algorithm: pre-exponents, clearance product, scaling exponents,
// truncation.
template <class T>
ScalingOutput scale_matrices(const Matrix<T>& a, const Matrix<T>& b, const ModuliTable& table) {
    require_dims(a.cols() == b.rows(), "scale_matrices inner dimension");
    ScalingOutput out;
    out.mu_prime = row_pre_exponents(a);
    out.nu_prime = col_pre_exponents(b);
    const MatrixI8 abar = ceil_abs_scale_rows(a, out.mu_prime);
    const MatrixI8 bbar = ceil_abs_scale_cols(b, out.nu_prime);
    ClearanceProduct cp = clearance_product(abar, bbar);
    out.Cbar = std::move(cp.Cbar);
    out.Dbar = std::move(cp.Dbar);
    ScalingExponents se = scaling_exponents(out.Dbar, out.mu_prime, out.nu_prime, table.P_prime);
    out.mu = std::move(se.mu);
    out.nu = std::move(se.nu);
    out.e = std::move(se.e);
    out.f = std::move(se.f);
    out.Aprime = truncate_scaled_rows(a, out.mu);
    out.Bprime = truncate_scaled_cols(b, out.nu);
    return out;
}

} // namespace oz2
