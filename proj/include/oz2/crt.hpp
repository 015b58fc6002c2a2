// crt.hpp — residue decomposition, residue GEMMs with INT32 wraparound,
// double-word accumulation, quotient recovery Q, and the final modular
// reduction producing C'' ~ A'B'.
#pragma once

#include "int8gemm.hpp"
#include "matrix.hpp"
#include "moduli.hpp"
#include "parallel.hpp"
#include "softfp.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace oz2 {

namespace detail {

inline long pow2_mod(long e, long p) {
    long base = 2 % p, acc = 1 % p;
    while (e > 0) {
        if (e & 1) acc = (acc * base) % p;
        base = (base * base) % p;
        e >>= 1;
    }
    return acc;
}

// Exact residue of an fp-integer x (|x| possibly far beyond 64 bits) via the
// significand/exponent decomposition x = +-mant * 2^exp with exp >= 0.
inline std::int8_t residue_of(double x, int p) {
    if (x == 0.0) return 0;
    if (!std::isfinite(x)) throw std::domain_error("residue_of: non-finite entry");
    int e;
    const double f = std::frexp(std::abs(x), &e);
    std::uint64_t mant = static_cast<std::uint64_t>(std::ldexp(f, 53));
    long exp = static_cast<long>(e) - 53;
    if (exp < 0) {
        const std::uint64_t low = mant & ((std::uint64_t{1} << -exp) - 1);
        if (low != 0) throw std::domain_error("residue_of: entry is not an integer");
        mant >>= -exp;
        exp = 0;
    }
    long r0 = static_cast<long>(mant % static_cast<std::uint64_t>(p));
    r0 = (r0 * pow2_mod(exp, p)) % p;
    if (x < 0.0) r0 = (p - r0) % p;
    // Signed representative in [-floor(p/2), floor(p/2)]; for even p the
    // boundary class p/2 is stored as -p/2 (INT8 wrap of +128 for p = 256).
    if (2 * r0 > p) return static_cast<std::int8_t>(r0 - p);
    if (2 * r0 == p) return static_cast<std::int8_t>(-p / 2);
    return static_cast<std::int8_t>(r0);
}

} // namespace detail

// mod(X', p): exact signed residues of an fp-integer matrix.
inline MatrixI8 residue_matrix(const Matrix<double>& xprime, int p) {
    MatrixI8 out(xprime.rows(), xprime.cols());
    parallel_for(xprime.rows(), [&](std::int64_t i) {
        for (std::int64_t j = 0; j < xprime.cols(); ++j)
            out(i, j) = detail::residue_of(xprime(i, j), p);
    });
    return out;
}

// W = mod(A_l * B_l, p): INT8 engine product (which may wrap at p = 256,
// preserving the residue since 256 | 2^32) followed by signed reduction.
inline MatrixI8 residue_gemm_and_reduce(const MatrixI8& a_l, const MatrixI8& b_l, int p) {
    const MatrixI32 c_l = gemm_i8_wrap(a_l, b_l);
    MatrixI8 w(c_l.rows(), c_l.cols());
    for (std::int64_t i = 0; i < c_l.rows(); ++i)
        for (std::int64_t j = 0; j < c_l.cols(); ++j) {
            long long v = signed_mod(static_cast<long long>(c_l(i, j)), p);
            if (2 * v == p) v = -v;
            w(i, j) = static_cast<std::int8_t>(v);
        }
    return w;
}

struct CrtIntermediates {
    std::vector<MatrixI8> W;     // N signed residue matrices of A'B'
    Matrix<double> C1, C2;       // fp64 accumulations of s1*W and s2*W
    Matrix<double> Q;            // integer-valued quotient matrix
    Matrix<double> Cpp64;        // C'' in fp64
    MatrixF32 Cpp32;             // single(C'') when mode is fp32; empty otherwise
};

// C'^(1) = fl(sum_l s_l1 W_l), C'^(2) = fl(sum_l s_l2 W_l): fp64 nearest,
// fixed order l = 1..N, each term folded in with one FMA.
inline std::pair<Matrix<double>, Matrix<double>> accumulate(const std::vector<MatrixI8>& w,
                                                            const ModuliTable& table) {
    if (static_cast<int>(w.size()) != table.n) throw std::invalid_argument("accumulate: W count != N");
    const std::int64_t m = w[0].rows(), n = w[0].cols();
    Matrix<double> c1(m, n), c2(m, n);
    const bool dd = table.mode == Prec::F64;
    parallel_for(m, [&](std::int64_t i) {
        for (std::int64_t j = 0; j < n; ++j) {
            double acc1 = 0.0, acc2 = 0.0;
            for (int l = 0; l < table.n; ++l) {
                const double wv = static_cast<double>(w[static_cast<std::size_t>(l)](i, j));
                acc1 = std::fma(table.s1[static_cast<std::size_t>(l)], wv, acc1);
                if (dd) acc2 = std::fma(table.s2[static_cast<std::size_t>(l)], wv, acc2);
            }
            c1(i, j) = acc1;
            c2(i, j) = acc2;
        }
    });
    return {std::move(c1), std::move(c2)};
}

// Q = round(fl(P_inv * C'^(1))), integer-valued with |Q| <= rho + 1/2.
inline Matrix<double> compute_q(const Matrix<double>& c1, const ModuliTable& table) {
    Matrix<double> q(c1.rows(), c1.cols());
    for (std::int64_t i = 0; i < c1.rows(); ++i)
        for (std::int64_t j = 0; j < c1.cols(); ++j)
            q(i, j) = round_nearest_even(table.P_inv * c1(i, j));
    return q;
}

struct FinalReduction {
    Matrix<double> Cpp64;
    MatrixF32 Cpp32;             // populated in fp32 mode
};

// C'' = fl(fma(-Q, P2, fma(-Q, P1, C'^(1)) + C'^(2))); fp32 mode then applies
// one fp64->fp32 nearest rounding, raising a range error on overflow (the
// scheme's fp32 mode is defined only while P/2 fits the fp32 range).
inline FinalReduction final_reduce(const Matrix<double>& c1, const Matrix<double>& c2,
                                   const Matrix<double>& q, const ModuliTable& table) {
    FinalReduction out;
    out.Cpp64 = Matrix<double>(c1.rows(), c1.cols());
    for (std::int64_t i = 0; i < c1.rows(); ++i)
        for (std::int64_t j = 0; j < c1.cols(); ++j) {
            const double t1 = std::fma(-q(i, j), table.P1, c1(i, j));
            const double t2 = t1 + c2(i, j);
            out.Cpp64(i, j) = std::fma(-q(i, j), table.P2, t2);
        }
    if (table.mode == Prec::F32) {
        out.Cpp32 = MatrixF32(c1.rows(), c1.cols());
        for (std::int64_t i = 0; i < c1.rows(); ++i)
            for (std::int64_t j = 0; j < c1.cols(); ++j) {
                const double v = out.Cpp64(i, j);
                if (std::abs(v) >= 0x1.ffffffp+127) throw std::range_error(
                    "final_reduce: single(C'') overflows fp32 (N too large for fp32 mode)");
                out.Cpp32(i, j) = static_cast<float>(v);
            }
    }
    return out;
}

// Full Algorithm: residues, per-modulus GEMM + reduction, accumulation,
// quotient, final reduction. The N residue pipelines are independent.
inline CrtIntermediates run_crt(const Matrix<double>& aprime, const Matrix<double>& bprime,
                                const ModuliTable& table) {
    require_dims(aprime.cols() == bprime.rows(), "run_crt inner dimension");
    CrtIntermediates out;
    out.W.resize(static_cast<std::size_t>(table.n));
    for (int l = 0; l < table.n; ++l) {
        const int p = table.p[static_cast<std::size_t>(l)];
        const MatrixI8 a_l = residue_matrix(aprime, p);
        const MatrixI8 b_l = residue_matrix(bprime, p);
        out.W[static_cast<std::size_t>(l)] = residue_gemm_and_reduce(a_l, b_l, p);
    }
    auto [c1, c2] = accumulate(out.W, table);
    out.C1 = std::move(c1);
    out.C2 = std::move(c2);
    out.Q = compute_q(out.C1, table);
    FinalReduction fr = final_reduce(out.C1, out.C2, out.Q, table);
    out.Cpp64 = std::move(fr.Cpp64);
    out.Cpp32 = std::move(fr.Cpp32);
    return out;
}

} // namespace oz2
