// bounds.hpp — deterministic error-bound evaluation: the tight elementwise
// bound with R_b and the cheap rank-1 bound with scalar r_b.
//
// Every arithmetic step rounds upward (or is exact rational), so a reported
// bound never under-reports the formula value. Intermediate magnitudes span
// ~2^+-400 for large N, hence extended precision throughout.
#pragma once

#include "matrix.hpp"
#include "moduli.hpp"
#include "mp.hpp"
#include "oracle.hpp"
#include "scaling.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace oz2 {

struct ExponentStats {
    std::vector<int> alpha;                 // floor(log2 max_h |a_ih|)
    std::vector<int> beta;                  // floor(log2 max_h |b_hj|)
    std::vector<std::int64_t> cbar_rowmax;  // row maxima of Cbar, clamped to >= 1
    std::vector<std::int64_t> cbar_colmax;  // col maxima of Cbar, clamped to >= 1
    std::int64_t k = 0;
};

// alpha/beta by exact exponent extraction; e'/f' are carried as the exact
// integer Cbar maxima (2^(e'/2) = sqrt(rowmax)). A zero Cbar row/column is
// clamped to 1, matching the scaling module's rule.
template <class T>
ExponentStats exponent_stats(const Matrix<T>& a, const Matrix<T>& b, const MatrixI32& cbar) {
    require_dims(cbar.rows() == a.rows() && cbar.cols() == b.cols(), "exponent_stats shape");
    ExponentStats st;
    st.k = a.cols();
    st.alpha.resize(static_cast<std::size_t>(a.rows()));
    st.beta.resize(static_cast<std::size_t>(b.cols()));
    for (std::int64_t i = 0; i < a.rows(); ++i) {
        const double mx = detail::row_abs_max(a, i);
        if (mx == 0.0) throw std::domain_error("exponent_stats: zero row");
        st.alpha[static_cast<std::size_t>(i)] = std::ilogb(mx);
    }
    for (std::int64_t j = 0; j < b.cols(); ++j) {
        const double mx = detail::col_abs_max(b, j);
        if (mx == 0.0) throw std::domain_error("exponent_stats: zero column");
        st.beta[static_cast<std::size_t>(j)] = std::ilogb(mx);
    }
    st.cbar_rowmax.assign(static_cast<std::size_t>(cbar.rows()), 1);
    st.cbar_colmax.assign(static_cast<std::size_t>(cbar.cols()), 1);
    for (std::int64_t i = 0; i < cbar.rows(); ++i)
        for (std::int64_t j = 0; j < cbar.cols(); ++j) {
            const std::int64_t v = cbar(i, j);
            auto& rm = st.cbar_rowmax[static_cast<std::size_t>(i)];
            auto& cm = st.cbar_colmax[static_cast<std::size_t>(j)];
            if (v > rm) rm = v;
            if (v > cm) cm = v;
        }
    return st;
}

enum class BoundKind { Tight, Cheap };

struct BoundResult {
    Matrix<double> bound;        // fp64 round-up projection, strictly positive
    BoundKind kind = BoundKind::Cheap;
};

namespace detail {

inline constexpr mpfr_prec_t kBoundPrec = 128;

// Exact rational constant term of R_b (everything except the u|A'B'| part).
inline mpq_class r_const_exact(const ModuliTable& t) {
    const mpq_class u32q(1, 1 << 24);
    const mpq_class u64q(mpz_class(1), mpz_class(1) << 53);
    const mpq_class rho_p = mpq_class(t.rho) * mpq_class(t.P);
    if (t.mode == Prec::F32) return (1 + u32q) * (t.n + 2) * u64q * rho_p;
    const int clr = ceil_log2_long(t.rho);
    return (1 + 3 * u64q) * mpq_class(mpz_class(1) << (1 + clr)) * (t.n + 2) * u64q * u64q * rho_p;
}

// Coefficient of |A'B'| within R_b.
inline mpq_class u_coef_exact(const ModuliTable& t) {
    if (t.mode == Prec::F32) return mpq_class(1, 1 << 24);
    return mpq_class(3) / mpq_class(mpz_class(1) << 53);
}

// Scalar r_b of the cheap bound: R_b with |A'B'| replaced by P/2.
inline mpq_class r_cheap_exact(const ModuliTable& t) {
    return r_const_exact(t) + u_coef_exact(t) * mpq_class(t.P) / 2;
}

template <class T>
std::vector<BigFloat> abs_row_sums_up(const Matrix<T>& a) {
    std::vector<BigFloat> s(static_cast<std::size_t>(a.rows()), BigFloat(kBoundPrec));
    for (std::int64_t i = 0; i < a.rows(); ++i) {
        BigFloat& acc = s[static_cast<std::size_t>(i)];
        for (std::int64_t h = 0; h < a.cols(); ++h)
            mpfr_add_d(acc.get(), acc.get(), std::abs(static_cast<double>(a(i, h))), MPFR_RNDU);
    }
    return s;
}

template <class T>
std::vector<BigFloat> abs_col_sums_up(const Matrix<T>& b) {
    std::vector<BigFloat> s(static_cast<std::size_t>(b.cols()), BigFloat(kBoundPrec));
    for (std::int64_t h = 0; h < b.rows(); ++h)
        for (std::int64_t j = 0; j < b.cols(); ++j)
            mpfr_add_d(s[static_cast<std::size_t>(j)].get(), s[static_cast<std::size_t>(j)].get(),
                       std::abs(static_cast<double>(b(h, j))), MPFR_RNDU);
    return s;
}

// 2^(alpha_i + e'_i/2) = 2^alpha_i * sqrt(cbar rowmax), rounded up.
inline std::vector<BigFloat> pow_alpha_prime_up(const std::vector<int>& alpha,
                                                const std::vector<std::int64_t>& cmax) {
    std::vector<BigFloat> out(alpha.size(), BigFloat(kBoundPrec));
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        mpfr_set_si(out[i].get(), static_cast<long>(cmax[i]), MPFR_RNDU);
        mpfr_sqrt(out[i].get(), out[i].get(), MPFR_RNDU);
        mpfr_mul_2si(out[i].get(), out[i].get(), alpha[i], MPFR_RNDU);
    }
    return out;
}

struct TScalars {
    BigFloat t_up{kBoundPrec};   // upper bound on t = 1/sqrt(2^5 (P-1))
    BigFloat t2_up{kBoundPrec};  // upper bound on t^2 = 1/(2^5 (P-1))
};

inline TScalars t_scalars_up(const ModuliTable& t) {
    TScalars out;
    const mpz_class denom = (t.P - 1) << 5;
    BigFloat d_down = BigFloat::from(denom, kBoundPrec, MPFR_RNDD);
    BigFloat s_down(kBoundPrec);
    mpfr_sqrt(s_down.get(), d_down.get(), MPFR_RNDD);
    mpfr_ui_div(out.t_up.get(), 1, s_down.get(), MPFR_RNDU);
    mpfr_ui_div(out.t2_up.get(), 1, d_down.get(), MPFR_RNDU);
    return out;
}

// Shared rank-1 evaluation: bound_ij = t (|A|v)_i 2^beta'_j + t 2^alpha'_i
// (v^T|B|)_j + kpR_ij * t^2 * 2^(alpha'_i + beta'_j), with kpR supplied per
// entry as an exact rational (monotone in the rational, so dominance between
// bound variants is preserved by the upward rounding).
template <class T, class KpR>
Matrix<double> eval_bound(const ExponentStats& st, const Matrix<T>& a, const Matrix<T>& b,
                          const ModuliTable& table, KpR&& kpr_at) {
    const std::int64_t m = a.rows(), n = b.cols();
    const auto rowsum = abs_row_sums_up(a);
    const auto colsum = abs_col_sums_up(b);
    const auto powa = pow_alpha_prime_up(st.alpha, st.cbar_rowmax);
    const auto powb = pow_alpha_prime_up(st.beta, st.cbar_colmax);
    const TScalars ts = t_scalars_up(table);

    Matrix<double> bound(m, n);
    BigFloat term1(kBoundPrec), term2(kBoundPrec), term3(kBoundPrec), acc(kBoundPrec);
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < n; ++j) {
            mpfr_mul(term1.get(), rowsum[static_cast<std::size_t>(i)].get(),
                     powb[static_cast<std::size_t>(j)].get(), MPFR_RNDU);
            mpfr_mul(term1.get(), term1.get(), ts.t_up.get(), MPFR_RNDU);
            mpfr_mul(term2.get(), powa[static_cast<std::size_t>(i)].get(),
                     colsum[static_cast<std::size_t>(j)].get(), MPFR_RNDU);
            mpfr_mul(term2.get(), term2.get(), ts.t_up.get(), MPFR_RNDU);
            const mpq_class kpr = kpr_at(i, j);
            BigFloat kpr_up = BigFloat::from(kpr, kBoundPrec, MPFR_RNDU);
            mpfr_mul(term3.get(), kpr_up.get(), ts.t2_up.get(), MPFR_RNDU);
            mpfr_mul(term3.get(), term3.get(), powa[static_cast<std::size_t>(i)].get(), MPFR_RNDU);
            mpfr_mul(term3.get(), term3.get(), powb[static_cast<std::size_t>(j)].get(), MPFR_RNDU);
            mpfr_add(acc.get(), term1.get(), term2.get(), MPFR_RNDU);
            mpfr_add(acc.get(), acc.get(), term3.get(), MPFR_RNDU);
            bound(i, j) = acc.to_double(MPFR_RNDU);
        }
    return bound;
}

} // namespace detail

// Tight bound: (kE + R_b) term uses the exact |A'B'| from the oracle.
template <class T>
BoundResult bound_tight(const ExponentStats& st, const Matrix<mpz_class>& abs_ab,
                        const Matrix<T>& a, const Matrix<T>& b, const ModuliTable& table) {
    require_dims(abs_ab.rows() == a.rows() && abs_ab.cols() == b.cols(), "bound_tight |A'B'| shape");
    const mpq_class rc = detail::r_const_exact(table);
    const mpq_class uc = detail::u_coef_exact(table);
    const mpq_class kq(static_cast<long>(st.k));
    BoundResult out;
    out.kind = BoundKind::Tight;
    out.bound = detail::eval_bound(st, a, b, table, [&](std::int64_t i, std::int64_t j) {
        return mpq_class(kq + rc + uc * mpq_class(abs_ab(i, j)));
    });
    return out;
}

// Cheap bound: scalar r_b; computable from matrix-vector quantities only.
template <class T>
BoundResult bound_cheap(const ExponentStats& st, const Matrix<T>& a, const Matrix<T>& b,
                        const ModuliTable& table) {
    const mpq_class kpr = mpq_class(static_cast<long>(st.k)) + detail::r_cheap_exact(table);
    BoundResult out;
    out.kind = BoundKind::Cheap;
    out.bound = detail::eval_bound(st, a, b, table, [&](std::int64_t, std::int64_t) { return kpr; });
    return out;
}

struct SuggestResult {
    bool achievable = false;
    int n = 0;
    double bound_max = 0;        // cheap-bound max at the reported N (or at the cap)
};

// Smallest N whose cheap-bound max entry meets the target. One clearance pass
// suffices: Cbar does not depend on N. fp32 candidates stop at the format's
// safe ceiling.
template <class T>
SuggestResult suggest_n(const Matrix<T>& a, const Matrix<T>& b, double target) {
    if (!(target > 0)) throw std::domain_error("suggest_n: target must be positive");
    const auto mu_prime = row_pre_exponents(a);
    const auto nu_prime = col_pre_exponents(b);
    const MatrixI8 abar = ceil_abs_scale_rows(a, mu_prime);
    const MatrixI8 bbar = ceil_abs_scale_cols(b, nu_prime);
    const ClearanceProduct cp = clearance_product(abar, bbar);
    const ExponentStats st = exponent_stats(a, b, cp.Cbar);

    const Prec prec = prec_of<T>;
    const int n_max = prec == Prec::F32 ? fp32_safe_moduli_max() : kMaxModuli;
    SuggestResult res;
    for (int n = 2; n <= n_max; ++n) {
        const BoundResult br = bound_cheap(st, a, b, table_for(n, prec));
        double mx = 0;
        for (std::int64_t i = 0; i < br.bound.rows(); ++i)
            for (std::int64_t j = 0; j < br.bound.cols(); ++j) mx = std::max(mx, br.bound(i, j));
        res.bound_max = mx;
        if (mx <= target) {
            res.achievable = true;
            res.n = n;
            return res;
        }
    }
    return res;
}

} // namespace oz2
