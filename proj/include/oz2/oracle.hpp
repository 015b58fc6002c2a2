// oracle.hpp — exact-arithmetic ground truth: dyadic big-integer GEMM, exact
// |A'||B'| and |A'B'|, exact CRT quantities, and conservative error-matrix
// extraction. Any disagreement between modules is resolved against this
// module; the oracle itself is validated elsewhere by an independent
// rational-arithmetic method.
#pragma once

#include "dyadic.hpp"
#include "matrix.hpp"
#include "moduli.hpp"
#include "parallel.hpp"
#include "softfp.hpp"

#include <gmpxx.h>

#include <cstdint>
#include <vector>

namespace oz2 {

using DyadicMatrix = Matrix<Dyadic>;

template <class T>
DyadicMatrix to_dyadic(const Matrix<T>& a) {
    DyadicMatrix d(a.rows(), a.cols());
    for (std::int64_t i = 0; i < a.rows(); ++i)
        for (std::int64_t j = 0; j < a.cols(); ++j)
            d(i, j) = Dyadic(static_cast<double>(a(i, j)));
    return d;
}

// Exact product of FP matrices (every entry converted losslessly).
template <class T>
DyadicMatrix exact_gemm(const Matrix<T>& a, const Matrix<T>& b) {
    require_dims(a.cols() == b.rows(), "exact_gemm inner dimension");
    const DyadicMatrix da = to_dyadic(a), db = to_dyadic(b);
    DyadicMatrix c(a.rows(), b.cols());
    parallel_for(a.rows(), [&](std::int64_t i) {
        for (std::int64_t j = 0; j < b.cols(); ++j) {
            Dyadic acc;
            for (std::int64_t h = 0; h < a.cols(); ++h) acc += da(i, h) * db(h, j);
            c(i, j) = acc;
        }
    });
    return c;
}

// Exact integer images of an fp-integer matrix.
inline Matrix<mpz_class> to_mpz_matrix(const Matrix<double>& x) {
    Matrix<mpz_class> z(x.rows(), x.cols());
    for (std::int64_t i = 0; i < x.rows(); ++i)
        for (std::int64_t j = 0; j < x.cols(); ++j)
            z(i, j) = Dyadic(x(i, j)).to_mpz();
    return z;
}

struct ProdGemm {
    Matrix<mpz_class> ab;            // A' B'       (signed exact product)
    Matrix<mpz_class> abs_ab;        // |A' B'|     (input to the tight bound)
};

// Exact signed product of fp-integer matrices plus its entrywise absolute
// value. One fused multiply-accumulate per term.
inline ProdGemm exact_prod_gemm(const Matrix<double>& aprime, const Matrix<double>& bprime) {
    require_dims(aprime.cols() == bprime.rows(), "exact_prod_gemm inner dimension");
    const Matrix<mpz_class> az = to_mpz_matrix(aprime), bz = to_mpz_matrix(bprime);
    ProdGemm out;
    out.ab = Matrix<mpz_class>(aprime.rows(), bprime.cols());
    out.abs_ab = Matrix<mpz_class>(aprime.rows(), bprime.cols());
    parallel_for(aprime.rows(), [&](std::int64_t i) {
        mpz_class acc;
        for (std::int64_t j = 0; j < bprime.cols(); ++j) {
            acc = 0;
            for (std::int64_t h = 0; h < aprime.cols(); ++h)
                mpz_addmul(acc.get_mpz_t(), az(i, h).get_mpz_t(), bz(h, j).get_mpz_t());
            mpz_abs(out.abs_ab(i, j).get_mpz_t(), acc.get_mpz_t());
            out.ab(i, j) = acc;
        }
    });
    return out;
}

struct AbsGemm {
    Matrix<mpz_class> abs_a_abs_b;   // |A'| |B'|   (uniqueness-margin check)
    Matrix<mpz_class> ab;            // A' B'       (signed exact product)
    Matrix<mpz_class> abs_ab;        // |A' B'|     (input to the tight bound)
};

inline AbsGemm exact_abs_gemm(const Matrix<double>& aprime, const Matrix<double>& bprime) {
    require_dims(aprime.cols() == bprime.rows(), "exact_abs_gemm inner dimension");
    const Matrix<mpz_class> az = to_mpz_matrix(aprime), bz = to_mpz_matrix(bprime);
    Matrix<mpz_class> az_abs(az.rows(), az.cols()), bz_abs(bz.rows(), bz.cols());
    for (std::int64_t i = 0; i < az.rows(); ++i)
        for (std::int64_t h = 0; h < az.cols(); ++h) az_abs(i, h) = abs(az(i, h));
    for (std::int64_t h = 0; h < bz.rows(); ++h)
        for (std::int64_t j = 0; j < bz.cols(); ++j) bz_abs(h, j) = abs(bz(h, j));
    AbsGemm out;
    out.abs_a_abs_b = Matrix<mpz_class>(aprime.rows(), bprime.cols());
    out.ab = Matrix<mpz_class>(aprime.rows(), bprime.cols());
    out.abs_ab = Matrix<mpz_class>(aprime.rows(), bprime.cols());
    parallel_for(aprime.rows(), [&](std::int64_t i) {
        mpz_class acc_abs, acc;
        for (std::int64_t j = 0; j < bprime.cols(); ++j) {
            acc_abs = 0;
            acc = 0;
            for (std::int64_t h = 0; h < aprime.cols(); ++h) {
                mpz_addmul(acc.get_mpz_t(), az(i, h).get_mpz_t(), bz(h, j).get_mpz_t());
                mpz_addmul(acc_abs.get_mpz_t(), az_abs(i, h).get_mpz_t(), bz_abs(h, j).get_mpz_t());
            }
            out.abs_a_abs_b(i, j) = acc_abs;
            mpz_abs(out.abs_ab(i, j).get_mpz_t(), acc.get_mpz_t());
            out.ab(i, j) = std::move(acc);
        }
    });
    return out;
}

struct CrtExact {
    Matrix<mpz_class> C_exact;       // sum_l P/p_l * q_l * W_l
    Matrix<long> Q_exact;            // round(C_exact / P), ties to even
    Matrix<mpz_class> mod_P;         // signed mod(C_exact, P); equals A'B'
};

// round(n / d) for d > 0, ties to even.
inline mpz_class round_rational_nearest_even(const mpz_class& n, const mpz_class& d) {
    mpz_class q0, rem;
    mpz_fdiv_qr(q0.get_mpz_t(), rem.get_mpz_t(), n.get_mpz_t(), d.get_mpz_t());
    const mpz_class twice = 2 * rem;
    if (twice > d) return q0 + 1;
    if (twice < d) return q0;
    return mpz_even_p(q0.get_mpz_t()) ? q0 : mpz_class(q0 + 1);
}

inline CrtExact exact_crt_quantities(const std::vector<MatrixI8>& w, const ModuliTable& table) {
    if (static_cast<int>(w.size()) != table.n)
        throw std::invalid_argument("exact_crt_quantities: W count != N");
    const std::int64_t m = w[0].rows(), n = w[0].cols();
    CrtExact out;
    out.C_exact = Matrix<mpz_class>(m, n);
    out.Q_exact = Matrix<long>(m, n);
    out.mod_P = Matrix<mpz_class>(m, n);
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < n; ++j) {
            mpz_class acc = 0;
            for (int l = 0; l < table.n; ++l) {
                const long wv = w[static_cast<std::size_t>(l)](i, j);
                if (wv >= 0)
                    mpz_addmul_ui(acc.get_mpz_t(), table.r[static_cast<std::size_t>(l)].get_mpz_t(),
                                  static_cast<unsigned long>(wv));
                else
                    mpz_submul_ui(acc.get_mpz_t(), table.r[static_cast<std::size_t>(l)].get_mpz_t(),
                                  static_cast<unsigned long>(-wv));
            }
            // sum_l q_l/p_l * W_l == C_exact / P exactly, so Q_exact is the
            // nearest-integer rounding of that rational.
            out.Q_exact(i, j) = round_rational_nearest_even(acc, table.P).get_si();
            out.mod_P(i, j) = signed_mod(acc, table.P);
            out.C_exact(i, j) = std::move(acc);
        }
    return out;
}

// Entrywise |exact - C| rounded up to fp64 (conservative report).
template <class T>
Matrix<double> error_matrix(const Matrix<T>& c, const DyadicMatrix& exact) {
    require_dims(c.rows() == exact.rows() && c.cols() == exact.cols(), "error_matrix shape");
    Matrix<double> err(c.rows(), c.cols());
    for (std::int64_t i = 0; i < c.rows(); ++i)
        for (std::int64_t j = 0; j < c.cols(); ++j)
            err(i, j) = to_fp64((exact(i, j) - Dyadic(static_cast<double>(c(i, j)))).abs(), Rnd::Up);
    return err;
}

} // namespace oz2
