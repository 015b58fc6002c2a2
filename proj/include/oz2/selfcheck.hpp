// selfcheck.hpp — executable verification suites: fp-kernel invariants, the
// floor-inequality sweep behind the scaling-exponent choice, CRT
// reconstruction, the INT8 engine against the big-integer oracle, and
// per-instance checks of the accumulation/quotient/reduction properties and
// the end-to-end bounds.
//
// Exact comparisons are done in integers/rationals wherever the statement is
// rational; irrational right-hand sides are bracketed with directed MPFR
// evaluations at increasing precision.
#pragma once

#include "bounds.hpp"
#include "crt.hpp"
#include "emulate.hpp"
#include "int8gemm.hpp"
#include "moduli.hpp"
#include "mp.hpp"
#include "oracle.hpp"
#include "prng.hpp"
#include "scaling.hpp"
#include "softfp.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace oz2::selfcheck {

struct Suite {
    std::string name;
    long long checked = 0;
    long long violations = 0;
    std::string note;
    bool pass() const { return violations == 0; }
};

// ---------------------------------------------------------------------------
// Safe comparisons against irrational right-hand sides
// ---------------------------------------------------------------------------

// True iff lhs < rhs certainly, where eval(rnd, prec) evaluates the rhs with
// the given directed rounding. Undecided after the precision ladder counts as
// "not less" (a violation at the call site).
inline bool certainly_less(const mpq_class& lhs,
                           const std::function<BigFloat(mpfr_rnd_t, mpfr_prec_t)>& eval) {
    for (mpfr_prec_t prec = 128; prec <= 1024; prec *= 2) {
        BigFloat dn = eval(MPFR_RNDD, prec);
        if (mpfr_cmp_q(dn.get(), lhs.get_mpq_t()) > 0) return true;
        BigFloat up = eval(MPFR_RNDU, prec);
        if (mpfr_cmp_q(up.get(), lhs.get_mpq_t()) <= 0) return false;
    }
    return false;
}

inline bool certainly_leq(const mpq_class& lhs,
                          const std::function<BigFloat(mpfr_rnd_t, mpfr_prec_t)>& eval) {
    for (mpfr_prec_t prec = 128; prec <= 1024; prec *= 2) {
        BigFloat dn = eval(MPFR_RNDD, prec);
        if (mpfr_cmp_q(dn.get(), lhs.get_mpq_t()) >= 0) return true;
        BigFloat up = eval(MPFR_RNDU, prec);
        if (mpfr_cmp_q(up.get(), lhs.get_mpq_t()) < 0) return false;
    }
    return false;
}

// ---------------------------------------------------------------------------
// fpkernel invariants
// ---------------------------------------------------------------------------

inline Suite check_signed_mod_range(long long x_max, long long x_step = 1) {
    Suite s;
    s.name = "signed_mod range & congruence";
    for (long long p = 2; p <= 256; ++p)
        for (long long x = -x_max; x <= x_max; x += x_step) {
            const long long r = signed_mod(x, p);
            ++s.checked;
            if ((x - r) % p != 0 || r < -(p / 2) || r > p / 2) ++s.violations;
        }
    return s;
}

inline Dyadic random_dyadic(Xoshiro256ss& rng, int exp_lo, int exp_hi) {
    mpz_class mant = rng.next() | 1;                   // odd, up to 64 bits
    if (rng.next() & 1) mant = -mant;
    const long exp = exp_lo + static_cast<long>(rng.next() % static_cast<std::uint64_t>(exp_hi - exp_lo));
    return Dyadic(mant, exp);
}

inline Suite check_directed_bracketing(long long samples, std::uint64_t seed) {
    Suite s;
    s.name = "directed rounding brackets the exact value";
    Xoshiro256ss rng(seed);
    for (long long it = 0; it < samples; ++it) {
        // fp32 side
        {
            Dyadic x = (it % 4 == 0) ? Dyadic(static_cast<float>(std::ldexp(
                                           static_cast<double>(rng.next() % (1ull << 24)) + 1.0,
                                           -static_cast<int>(rng.next() % 40))))
                                     : random_dyadic(rng, -170, 55);
            const float dn = to_fp32(x, Rnd::Down);
            const float up = to_fp32(x, Rnd::Up);
            ++s.checked;
            const bool member = Dyadic(dn) == x;
            bool ok = Dyadic(dn) <= x && x <= Dyadic(up);
            ok = ok && (member == (dn == up));
            if (!member)
                ok = ok && up == std::nextafterf(dn, std::numeric_limits<float>::infinity());
            if (!ok) ++s.violations;
        }
        // fp64 side
        {
            Dyadic x = random_dyadic(rng, -1080, 920);
            const double dn = to_fp64(x, Rnd::Down);
            const double up = to_fp64(x, Rnd::Up);
            ++s.checked;
            const bool member = Dyadic(dn) == x;
            bool ok = Dyadic(dn) <= x && x <= Dyadic(up);
            ok = ok && (member == (dn == up));
            if (!member)
                ok = ok && up == std::nextafter(dn, std::numeric_limits<double>::infinity());
            if (!ok) ++s.violations;
        }
    }
    return s;
}

inline double random_double(Xoshiro256ss& rng, int exp_span) {
    const double m = rng.uniform() * 2.0 - 1.0;
    const int e = static_cast<int>(rng.next() % static_cast<std::uint64_t>(2 * exp_span)) - exp_span;
    return std::ldexp(m, e);
}

// Verifies both the software FMA (single rounding of the exact a*b+c) and
// that std::fma agrees bit-for-bit, licensing its use on the hot paths.
inline Suite check_fma_single_rounding(long long samples, std::uint64_t seed) {
    Suite s;
    s.name = "fma = single rounding of exact a*b+c";
    Xoshiro256ss rng(seed);
    for (long long it = 0; it < samples; ++it) {
        const double a = random_double(rng, 100), b = random_double(rng, 100),
                     c = random_double(rng, 180);
        const double sw = to_fp64(Dyadic(a) * Dyadic(b) + Dyadic(c));
        const double hw = std::fma(a, b, c);
        ++s.checked;
        if (!(sw == hw)) ++s.violations;

        const float af = static_cast<float>(random_double(rng, 30));
        const float bf = static_cast<float>(random_double(rng, 30));
        const float cf = static_cast<float>(random_double(rng, 50));
        const float swf = fma_fp32(af, bf, cf, Rnd::Nearest);
        const float hwf = std::fmaf(af, bf, cf);
        ++s.checked;
        if (!(swf == hwf)) ++s.violations;
    }
    return s;
}

// |log2f(x) - log2 x| <= 4 u32 log2 x for x = fp32 images of integers >= 1.
inline Suite check_log2f_bound(std::uint32_t exhaustive_to, long long samples,
                               std::uint64_t seed) {
    Suite s;
    s.name = "log2f relative-error bound";
    BigFloat ref(96);
    auto check_one = [&](float x) {
        const float d = log2_fp32(x);
        ++s.checked;
        if (x == 1.0f) {
            if (d != 0.0f) ++s.violations;
            return;
        }
        mpfr_set_flt(ref.get(), x, MPFR_RNDN);          // exact
        mpfr_log2(ref.get(), ref.get(), MPFR_RNDN);
        const double lo = mpfr_get_d(ref.get(), MPFR_RNDD);
        const double hi = mpfr_get_d(ref.get(), MPFR_RNDU);
        const double err = std::max(std::abs(static_cast<double>(d) - lo),
                                    std::abs(static_cast<double>(d) - hi)) * (1 + 0x1p-40);
        const double rhs = 4.0 * kU32 * lo * (1 - 0x1p-40);
        if (!(err <= rhs)) ++s.violations;
    };
    for (std::uint32_t c = 1; c <= exhaustive_to; ++c) check_one(static_cast<float>(c));
    Xoshiro256ss rng(seed);
    for (long long it = 0; it < samples; ++it)
        check_one(static_cast<float>(1 + rng.next() % ((1u << 29) - 1)));
    return s;
}

inline Suite check_ufp_range(long long samples, std::uint64_t seed) {
    Suite s;
    s.name = "ufp(x) <= |x| < 2 ufp(x)";
    Xoshiro256ss rng(seed);
    if (ufp(0.0) != 0.0) ++s.violations;
    ++s.checked;
    for (long long it = 0; it < samples; ++it) {
        double x = random_double(rng, 1000);
        if (it % 7 == 0) x = std::ldexp(x, -320);        // reach subnormals
        if (x == 0.0) continue;
        const double u = ufp(x);
        const double ax = std::abs(x);
        ++s.checked;
        if (!(u <= ax && ax - u < u && u == std::ldexp(1.0, std::ilogb(u)))) ++s.violations;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Floor inequality behind the scaling-exponent proof:
//   floor(P' - 0.5 (1 + u32) e') <= P' - 0.5 e' - 2^-21
// for every table's P' and e' = log2(c).
// ---------------------------------------------------------------------------

namespace dd {

struct Double2 { double hi = 0, lo = 0; };

inline Double2 two_sum(double a, double b) {
    const double s = a + b;
    const double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

inline Double2 mul_d(const Double2& a, double b) {
    const double p = a.hi * b;
    const double e = std::fma(a.hi, b, -p);
    return two_sum(p, std::fma(a.lo, b, e));
}

inline Double2 sub_from(double a, const Double2& b) {       // a - b
    Double2 s = two_sum(a, -b.hi);
    s.lo -= b.lo;
    return two_sum(s.hi, s.lo);
}

} // namespace dd

inline Suite check_floor_inequality(std::uint32_t exhaustive_to, long long samples,
                                    std::uint64_t seed) {
    Suite s;
    s.name = "floor inequality for scaling exponents";
    std::vector<float> pprimes;
    for (int n = 2; n <= kMaxModuli; ++n) pprimes.push_back(table_for(n, Prec::F64).P_prime);

    const double half_up = 0.5 + 0x1p-25;               // 0.5 (1 + u32), exact
    BigFloat work(120);

    auto recheck_mpfr = [&](std::uint64_t c, float pp) -> bool {
        // Definitive bracketed evaluation of both sides.
        for (mpfr_prec_t prec = 256; prec <= 1024; prec *= 2) {
            BigFloat e_lo(prec), e_hi(prec), l(prec), r(prec);
            mpfr_set_ui(e_lo.get(), c, MPFR_RNDD);
            mpfr_log2(e_lo.get(), e_lo.get(), MPFR_RNDD);
            mpfr_set_ui(e_hi.get(), c, MPFR_RNDU);
            mpfr_log2(e_hi.get(), e_hi.get(), MPFR_RNDU);
            // lhs_hi = floor of upper bound of P' - 0.5(1+u32) e'
            mpfr_mul_d(l.get(), e_lo.get(), half_up, MPFR_RNDD);
            mpfr_d_sub(l.get(), static_cast<double>(pp), l.get(), MPFR_RNDU);
            mpfr_floor(l.get(), l.get());
            // rhs_lo = lower bound of P' - 0.5 e' - 2^-21
            mpfr_mul_d(r.get(), e_hi.get(), 0.5, MPFR_RNDU);
            mpfr_d_sub(r.get(), static_cast<double>(pp) - 0x1p-21, r.get(), MPFR_RNDD);
            if (mpfr_cmp(l.get(), r.get()) <= 0) return true;
            // lhs_lo vs rhs_hi to confirm a genuine violation
            BigFloat l2(prec), r2(prec);
            mpfr_mul_d(l2.get(), e_hi.get(), half_up, MPFR_RNDU);
            mpfr_d_sub(l2.get(), static_cast<double>(pp), l2.get(), MPFR_RNDD);
            mpfr_floor(l2.get(), l2.get());
            mpfr_mul_d(r2.get(), e_lo.get(), 0.5, MPFR_RNDD);
            mpfr_d_sub(r2.get(), static_cast<double>(pp) - 0x1p-21, r2.get(), MPFR_RNDU);
            if (mpfr_cmp(l2.get(), r2.get()) > 0) return false;
        }
        return false;
    };

    auto check_c = [&](std::uint64_t c) {
        dd::Double2 e;
        if ((c & (c - 1)) == 0) {
            e.hi = static_cast<double>(std::ilogb(static_cast<double>(c)));
        } else {
            mpfr_set_ui(work.get(), c, MPFR_RNDN);
            mpfr_log2(work.get(), work.get(), MPFR_RNDN);
            e.hi = mpfr_get_d(work.get(), MPFR_RNDN);
            mpfr_sub_d(work.get(), work.get(), e.hi, MPFR_RNDN);
            e.lo = mpfr_get_d(work.get(), MPFR_RNDN);
        }
        for (float pp : pprimes) {
            ++s.checked;
            const dd::Double2 x = dd::sub_from(static_cast<double>(pp), dd::mul_d(e, half_up));
            double fl = std::floor(x.hi);
            double frac = (x.hi - fl) + x.lo;
            if (frac >= 1.0) { fl += 1.0; frac -= 1.0; }
            if (frac < 0.0) { fl -= 1.0; frac += 1.0; }
            const dd::Double2 rhs =
                dd::sub_from(static_cast<double>(pp) - 0x1p-21, dd::mul_d(e, 0.5));
            const double slack = (rhs.hi - fl) + rhs.lo;
            const bool boundary = std::min(frac, 1.0 - frac) < 0x1p-40;
            if (boundary || slack < 0x1p-40) {
                if (!recheck_mpfr(c, pp)) ++s.violations;
            }
            // slack >= 2^-40 is certain: dd/subtraction error stays below 2^-43
        }
    };

    for (std::uint64_t c = 1; c <= exhaustive_to; ++c) check_c(c);
    check_c(1ull << 29);
    Xoshiro256ss rng(seed);
    for (long long it = 0; it < samples; ++it) check_c(1 + rng.next() % (1ull << 29));
    return s;
}

// ---------------------------------------------------------------------------
// CRT reconstruction & INT8 engine
// ---------------------------------------------------------------------------

inline mpz_class random_mpz_below(Xoshiro256ss& rng, const mpz_class& bound) {
    const std::size_t words = mpz_sizeinbase(bound.get_mpz_t(), 2) / 64 + 2;
    mpz_class x = 0;
    for (std::size_t w = 0; w < words; ++w) {
        x <<= 64;
        x += static_cast<unsigned long>(rng.next());
    }
    return x % bound;
}

// x = mod(sum_l P/p_l q_l mod(x, p_l), P) for random |x| < P/2.
inline Suite check_crt_reconstruction(const ModuliTable& table, int count, std::uint64_t seed) {
    Suite s;
    s.name = "CRT reconstruction identity (N=" + std::to_string(table.n) + ")";
    Xoshiro256ss rng(seed);
    const mpz_class half = (table.P - 1) / 2;
    for (int it = 0; it < count; ++it) {
        mpz_class x = random_mpz_below(rng, 2 * half + 1) - half;   // |x| <= (P-1)/2
        mpz_class acc = 0;
        for (int l = 0; l < table.n; ++l) {
            const mpz_class y = signed_mod(x, mpz_class(table.p[static_cast<std::size_t>(l)]));
            acc += table.r[static_cast<std::size_t>(l)] * y;
        }
        ++s.checked;
        if (signed_mod(acc, table.P) != x) ++s.violations;
    }
    return s;
}

inline Suite check_int8_wrap(int instances, std::uint64_t seed) {
    Suite s;
    s.name = "INT8 engine wrap-congruence vs big-integer GEMM";
    Xoshiro256ss rng(seed);

    auto verify = [&s](const MatrixI8& a, const MatrixI8& b) {
        const MatrixI32 c = gemm_i8_wrap(a, b);
        for (std::int64_t i = 0; i < c.rows(); ++i)
            for (std::int64_t j = 0; j < c.cols(); ++j) {
                long long exact = 0;
                for (std::int64_t h = 0; h < a.cols(); ++h)
                    exact += static_cast<long long>(a(i, h)) * b(h, j);
                const auto wrapped = static_cast<std::int32_t>(static_cast<std::uint32_t>(
                    static_cast<std::uint64_t>(exact)));
                ++s.checked;
                bool ok = c(i, j) == wrapped;
                ok = ok && signed_mod(static_cast<long long>(c(i, j)), 256) == signed_mod(exact, 256);
                if (std::abs(exact) < (1ll << 31)) ok = ok && c(i, j) == exact;
                if (!ok) ++s.violations;
            }
    };

    // Constructed wrap case: 128*128*2^17 = 2^31 wraps to -2^31.
    {
        MatrixI8 a(1, kMaxInnerDim, static_cast<std::int8_t>(-128));
        MatrixI8 b(kMaxInnerDim, 1, static_cast<std::int8_t>(-128));
        const MatrixI32 c = gemm_i8_wrap(a, b);
        ++s.checked;
        if (c(0, 0) != std::numeric_limits<std::int32_t>::min()) ++s.violations;
    }
    // No-wrap maximal clearance case: all 2^6 entries, k = 2^17 -> exactly 2^29.
    {
        MatrixI8 a(1, kMaxInnerDim, static_cast<std::int8_t>(64));
        MatrixI8 b(kMaxInnerDim, 1, static_cast<std::int8_t>(64));
        const MatrixI32 c = gemm_i8_wrap(a, b);
        ++s.checked;
        if (c(0, 0) != (1 << 29)) ++s.violations;
    }

    for (int it = 0; it < instances; ++it) {
        const std::int64_t m = 1 + rng.next() % 6, k = 1 + rng.next() % 64, n = 1 + rng.next() % 6;
        MatrixI8 a(m, k), b(k, n);
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t h = 0; h < k; ++h)
                a(i, h) = static_cast<std::int8_t>(rng.next() & 0xff);
        for (std::int64_t h = 0; h < k; ++h)
            for (std::int64_t j = 0; j < n; ++j)
                b(h, j) = static_cast<std::int8_t>(rng.next() & 0xff);
        verify(a, b);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Per-instance verification of the full pipeline
// ---------------------------------------------------------------------------

struct InstanceChecks {
    long long uniqueness = 0;        // |A'||B'| vs (P-1) 2^(-1-2^-20)
    long long mu_lower = 0;          // scaling-exponent lower bounds
    long long truncation = 0;        // truncation bound
    long long accumulation = 0;      // accumulation exactness / bound
    long long quotient = 0;          // Q vs exact-rational Q, tie distance
    long long q_range = 0;           // |Q| <= rho + 1/2
    long long reduction = 0;         // final reduction bound
    long long crt_identity = 0;      // mod(C_exact, P) == A'B'
    long long residue_fidelity = 0;  // W_l == A'B' (mod p_l)
    long long bound_soundness = 0;   // err <= tight <= cheap (reported values)
    long long format = 0;            // A'/B' representable in the working format
    bool range_error = false;        // fp32 single(C'') overflow was raised
    long long checked = 0;

    long long total_violations() const {
        return uniqueness + mu_lower + truncation + accumulation + quotient + q_range +
               reduction + crt_identity + residue_fidelity + bound_soundness + format;
    }
};

template <class T>
InstanceChecks check_instance(const Matrix<T>& a, const Matrix<T>& b, int n) {
    InstanceChecks out;
    const ModuliTable& table = table_for(n, prec_of<T>);

    EmulationResult<T> res;
    try {
        res = os_ii(a, b, n, /*keep_intermediates=*/true);
    } catch (const std::range_error&) {
        out.range_error = true;
        return out;
    }

    const std::int64_t m = a.rows(), nn = b.cols();
    const AbsGemm absg = exact_abs_gemm(res.scaling.Aprime, res.scaling.Bprime);
    const DyadicMatrix exact_ab = exact_gemm(a, b);
    const ExponentStats st = exponent_stats(a, b, res.scaling.Cbar);

    // Uniqueness margin: |A'||B'| <= (P-1) 2^(-1-2^-20) < P/2 elementwise.
    {
        const mpz_class pm1 = table.P - 1;
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < nn; ++j) {
                ++out.checked;
                const mpq_class lhs(absg.abs_a_abs_b(i, j));
                const bool ok = certainly_less(lhs, [&](mpfr_rnd_t rnd, mpfr_prec_t prec) {
                    BigFloat e(prec), r(prec);
                    mpfr_set_d(e.get(), -0x1p-20, MPFR_RNDN);
                    mpfr_exp2(e.get(), e.get(), rnd);
                    mpfr_set_z(r.get(), pm1.get_mpz_t(), rnd);
                    mpfr_mul(r.get(), r.get(), e.get(), rnd);
                    mpfr_div_2ui(r.get(), r.get(), 1, rnd);
                    return r;
                });
                if (!ok) ++out.uniqueness;
            }
    }

    // Scaling-exponent lower bounds, exactly in integers:
    // mu_i >= -alpha'_i + (log2(P-1)+5)/2  <=>  cmax_i 4^(mu_i+alpha_i) >= 32 (P-1).
    {
        const mpz_class rhs = 32 * (table.P - 1);
        auto check_side = [&](std::int16_t shift, int alpha, std::int64_t cmax) {
            ++out.checked;
            const long e2 = 2l * (shift + alpha);
            mpz_class lhs(static_cast<long>(cmax));
            mpz_class r2 = rhs;
            if (e2 >= 0) lhs <<= static_cast<unsigned long>(e2);
            else r2 <<= static_cast<unsigned long>(-e2);
            if (lhs < r2) ++out.mu_lower;
        };
        for (std::int64_t i = 0; i < m; ++i)
            check_side(res.scaling.mu[static_cast<std::size_t>(i)], st.alpha[static_cast<std::size_t>(i)],
                       st.cbar_rowmax[static_cast<std::size_t>(i)]);
        for (std::int64_t j = 0; j < nn; ++j)
            check_side(res.scaling.nu[static_cast<std::size_t>(j)], st.beta[static_cast<std::size_t>(j)],
                       st.cbar_colmax[static_cast<std::size_t>(j)]);
    }

    // Truncation bound: |AB - 2^-mu A'B' 2^-nu| <= t|A|v(2^b')^T + t 2^a' v^T|B| + k t^2 2^a'(2^b')^T.
    {
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < nn; ++j) {
                ++out.checked;
                const Dyadic recon = Dyadic::from_mpz(absg.ab(i, j))
                                         .ldexp(-res.scaling.mu[static_cast<std::size_t>(i)] -
                                                res.scaling.nu[static_cast<std::size_t>(j)]);
                const mpq_class lhs = (exact_ab(i, j) - recon).abs().to_mpq();
                const bool ok = certainly_leq(lhs, [&](mpfr_rnd_t rnd, mpfr_prec_t prec) {
                    BigFloat t(prec), rs(prec), cs(prec), pa(prec), pb(prec), acc(prec), tmp(prec);
                    mpfr_set_z(t.get(), mpz_class((table.P - 1) << 5).get_mpz_t(),
                               rnd == MPFR_RNDD ? MPFR_RNDU : MPFR_RNDD);
                    mpfr_sqrt(t.get(), t.get(), rnd == MPFR_RNDD ? MPFR_RNDU : MPFR_RNDD);
                    mpfr_ui_div(t.get(), 1, t.get(), rnd);               // t rounded per rnd
                    mpfr_set_zero(rs.get(), 1);
                    for (std::int64_t h = 0; h < a.cols(); ++h)
                        mpfr_add_d(rs.get(), rs.get(), std::abs(static_cast<double>(a(i, h))), rnd);
                    mpfr_set_zero(cs.get(), 1);
                    for (std::int64_t h = 0; h < b.rows(); ++h)
                        mpfr_add_d(cs.get(), cs.get(), std::abs(static_cast<double>(b(h, j))), rnd);
                    mpfr_set_si(pa.get(), static_cast<long>(st.cbar_rowmax[static_cast<std::size_t>(i)]), rnd);
                    mpfr_sqrt(pa.get(), pa.get(), rnd);
                    mpfr_mul_2si(pa.get(), pa.get(), st.alpha[static_cast<std::size_t>(i)], rnd);
                    mpfr_set_si(pb.get(), static_cast<long>(st.cbar_colmax[static_cast<std::size_t>(j)]), rnd);
                    mpfr_sqrt(pb.get(), pb.get(), rnd);
                    mpfr_mul_2si(pb.get(), pb.get(), st.beta[static_cast<std::size_t>(j)], rnd);
                    mpfr_mul(acc.get(), rs.get(), pb.get(), rnd);
                    mpfr_mul(tmp.get(), pa.get(), cs.get(), rnd);
                    mpfr_add(acc.get(), acc.get(), tmp.get(), rnd);
                    mpfr_mul(acc.get(), acc.get(), t.get(), rnd);
                    mpfr_mul(tmp.get(), pa.get(), pb.get(), rnd);
                    mpfr_mul(tmp.get(), tmp.get(), t.get(), rnd);
                    mpfr_mul(tmp.get(), tmp.get(), t.get(), rnd);
                    mpfr_mul_si(tmp.get(), tmp.get(), static_cast<long>(a.cols()), rnd);
                    mpfr_add(acc.get(), acc.get(), tmp.get(), rnd);
                    return acc;
                });
                if (!ok) ++out.truncation;
            }
    }

    const CrtExact ce = exact_crt_quantities(res.crt.W, table);

    // Accumulation: exact in fp64 mode; bounded by (N+1) u64 rho P in fp32 mode.
    {
        const mpq_class bound32 = mpq_class(table.n + 1) * mpq_class(mpz_class(1), mpz_class(1) << 53) *
                                  table.rho * mpq_class(table.P);
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < nn; ++j) {
                ++out.checked;
                if (table.mode == Prec::F64) {
                    Dyadic sum;
                    for (int l = 0; l < table.n; ++l)
                        sum += Dyadic(table.s1[static_cast<std::size_t>(l)]) *
                               Dyadic(static_cast<long>(res.crt.W[static_cast<std::size_t>(l)](i, j)));
                    if (!(Dyadic(res.crt.C1(i, j)) == sum)) ++out.accumulation;
                } else {
                    const mpq_class diff =
                        abs(Dyadic(res.crt.C1(i, j)).to_mpq() - mpq_class(ce.C_exact(i, j)));
                    if (diff > bound32) ++out.accumulation;
                }
            }
    }

    // Q: equals the exact-rational rounding; the pre-rounding value is
    // strictly closer than 1/2 to it (no ties can occur).
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < nn; ++j) {
            ++out.checked;
            const double pre = table.P_inv * res.crt.C1(i, j);
            const double q = res.crt.Q(i, j);
            if (!(q == static_cast<double>(ce.Q_exact(i, j)))) ++out.quotient;
            if (!(std::abs(pre - q) < 0.5)) ++out.quotient;
            if (!(std::abs(q) <= static_cast<double>(table.rho) + 0.5)) ++out.q_range;
        }

    // CRT identity and residue fidelity against the signed exact product.
    {
        Matrix<mpz_class> ab_signed(m, nn);
        const Matrix<mpz_class> az = to_mpz_matrix(res.scaling.Aprime);
        const Matrix<mpz_class> bz = to_mpz_matrix(res.scaling.Bprime);
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < nn; ++j) {
                mpz_class acc = 0;
                for (std::int64_t h = 0; h < a.cols(); ++h)
                    mpz_addmul(acc.get_mpz_t(), az(i, h).get_mpz_t(), bz(h, j).get_mpz_t());
                ab_signed(i, j) = acc;
                ++out.checked;
                if (ce.mod_P(i, j) != acc) ++out.crt_identity;
                for (int l = 0; l < table.n; ++l) {
                    const mpz_class d = acc - res.crt.W[static_cast<std::size_t>(l)](i, j);
                    if (!mpz_divisible_ui_p(d.get_mpz_t(),
                                            static_cast<unsigned long>(table.p[static_cast<std::size_t>(l)])))
                        ++out.residue_fidelity;
                }
            }

        // Final reduction: |A'B' - C''| <= R_b, exactly in rationals.
        const mpq_class rc = detail::r_const_exact(table);
        const mpq_class uc = detail::u_coef_exact(table);
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < nn; ++j) {
                ++out.checked;
                const double cpp = table.mode == Prec::F32
                                       ? static_cast<double>(res.crt.Cpp32(i, j))
                                       : res.crt.Cpp64(i, j);
                const mpq_class lhs = abs(mpq_class(ab_signed(i, j)) - Dyadic(cpp).to_mpq());
                const mpq_class rb = rc + uc * mpq_class(abs(ab_signed(i, j)));
                if (lhs > rb) ++out.reduction;
            }
    }

    // End-to-end: reported err <= reported tight bound <= reported cheap bound.
    {
        const BoundResult tight = bound_tight(st, absg.abs_ab, a, b, table);
        const BoundResult cheap = bound_cheap(st, a, b, table);
        const Matrix<double> err = error_matrix(res.C, exact_ab);
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < nn; ++j) {
                ++out.checked;
                if (!(err(i, j) <= tight.bound(i, j) && tight.bound(i, j) <= cheap.bound(i, j)))
                    ++out.bound_soundness;
            }
    }

    // Working-format membership of A'/B' (value range permitting).
    if constexpr (std::is_same_v<T, float>) {
        auto check_fmt = [&](const Matrix<double>& x) {
            for (std::int64_t i = 0; i < x.rows(); ++i)
                for (std::int64_t j = 0; j < x.cols(); ++j) {
                    ++out.checked;
                    const double v = x(i, j);
                    if (std::abs(v) <= 0x1.fffffep+127 &&
                        static_cast<double>(static_cast<float>(v)) != v)
                        ++out.format;
                }
        };
        check_fmt(res.scaling.Aprime);
        check_fmt(res.scaling.Bprime);
    }

    return out;
}

} // namespace oz2::selfcheck
