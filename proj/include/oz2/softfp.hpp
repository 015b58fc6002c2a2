// softfp.hpp — scalar floating-point primitives with explicit rounding
// direction, computed in software from exact dyadic values. The FPU rounding
// mode is never touched; everything here is deterministic and thread-safe.
//
// Unit roundoffs: u32 = 2^-24, u64 = 2^-53.
#pragma once

#include "dyadic.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace oz2 {

enum class Rnd { Nearest, Down, Up };

inline constexpr double kU32 = 0x1p-24;
inline constexpr double kU64 = 0x1p-53;

namespace detail {

// Correctly rounded conversion of a dyadic value to a binary FP format with
// `prec` significand bits, minimum (subnormal) exponent quantum 2^emin_sub,
// and largest binade [2^emax_binade, 2^emax_binade+1). Overflow throws.
template <int Prec, int EminSub, int EmaxBinade>
double round_dyadic(const Dyadic& x, Rnd dir, const char* fmt_name) {
    if (x.is_zero()) return 0.0;

    const bool neg = x.sign() < 0;
    mpz_class mag = ::abs(x.mantissa());
    const long len = static_cast<long>(mpz_sizeinbase(mag.get_mpz_t(), 2));
    const long binade = len + x.exponent() - 1;             // value in [2^binade, 2^binade+1)
    const long quantum = std::max<long>(binade - (Prec - 1), EminSub);
    const long shift = x.exponent() - quantum;

    mpz_class units;
    bool rem_nonzero = false;
    int rem_vs_half = -1;                                   // -1 below, 0 at, +1 above half-ulp
    if (shift >= 0) {
        units = mag << static_cast<unsigned long>(shift);
    } else {
        const unsigned long s = static_cast<unsigned long>(-shift);
        units = mag >> s;
        mpz_class rem = mag - (units << s);
        rem_nonzero = rem != 0;
        mpz_class half = mpz_class(1) << (s - 1);
        rem_vs_half = cmp(rem, half);
    }

    bool bump = false;
    switch (dir) {
        case Rnd::Nearest:
            if (rem_vs_half > 0) bump = true;
            else if (rem_vs_half == 0) bump = mpz_odd_p(units.get_mpz_t());
            break;
        case Rnd::Down: bump = neg && rem_nonzero; break;
        case Rnd::Up:   bump = !neg && rem_nonzero; break;
    }
    if (bump) units += 1;

    if (units == 0) return neg ? -0.0 : 0.0;
    const long rlen = static_cast<long>(mpz_sizeinbase(units.get_mpz_t(), 2));
    if (rlen + quantum - 1 > EmaxBinade)
        throw std::range_error(std::string(fmt_name) + " overflow in directed rounding");

    const double u = mpz_get_d(units.get_mpz_t());          // exact: units < 2^(Prec+1)
    const double r = std::ldexp(u, static_cast<int>(quantum));
    return neg ? -r : r;
}

} // namespace detail

inline double to_fp64(const Dyadic& x, Rnd dir = Rnd::Nearest) {
    return detail::round_dyadic<53, -1074, 1023>(x, dir, "fp64");
}

inline float to_fp32(const Dyadic& x, Rnd dir = Rnd::Nearest) {
    // The rounded value is a member of F32; the final cast is exact.
    return static_cast<float>(detail::round_dyadic<24, -149, 127>(x, dir, "fp32"));
}

// Single rounding of the exact a*b + c.
inline double fma_fp64(double a, double b, double c, Rnd dir = Rnd::Nearest) {
    return to_fp64(Dyadic(a) * Dyadic(b) + Dyadic(c), dir);
}
inline float fma_fp32(float a, float b, float c, Rnd dir = Rnd::Nearest) {
    return to_fp32(Dyadic(a) * Dyadic(b) + Dyadic(c), dir);
}

// round(x): nearest integer, ties to even.
inline double round_nearest_even(double x) {
    if (!std::isfinite(x)) throw std::domain_error("round_nearest_even: non-finite");
    if (std::abs(x) >= 0x1p52) return x;                    // already integral
    const double fl = std::floor(x);
    const double frac = x - fl;                             // exact: both on ulp(x) grid
    if (frac > 0.5) return fl + 1.0;
    if (frac < 0.5) return fl;
    return std::fmod(fl, 2.0) == 0.0 ? fl : fl + 1.0;
}

inline long long round_nearest_even_ll(double x) {
    const double r = round_nearest_even(x);
    if (std::abs(r) > 0x1p62) throw std::range_error("round_nearest_even_ll: out of range");
    return static_cast<long long>(r);
}

// trunc(x): integer part, toward zero.
inline long long trunc_ll(double x) {
    if (!std::isfinite(x) || std::abs(x) > 0x1p62) throw std::range_error("trunc_ll: out of range");
    return static_cast<long long>(std::trunc(x));
}

// mod(x, p) = x - p*round(x/p); result in [-floor(p/2), floor(p/2)].
inline long long signed_mod(long long x, long long p) {
    if (p < 2) throw std::domain_error("signed_mod: p must be >= 2");
    long long r0 = x % p;
    if (r0 < 0) r0 += p;
    if (2 * r0 < p) return r0;
    if (2 * r0 > p) return r0 - p;
    const long long q0 = (x - r0) / p;                      // tie: round(x/p) to even
    return (q0 % 2 == 0) ? r0 : r0 - p;
}

inline mpz_class signed_mod(const mpz_class& x, const mpz_class& p) {
    if (p < 2) throw std::domain_error("signed_mod: p must be >= 2");
    mpz_class r0;
    mpz_mod(r0.get_mpz_t(), x.get_mpz_t(), p.get_mpz_t());
    const mpz_class twice = 2 * r0;
    if (twice < p) return r0;
    if (twice > p) return r0 - p;
    mpz_class q0 = (x - r0) / p;
    return mpz_even_p(q0.get_mpz_t()) ? r0 : mpz_class(r0 - p);
}

// ufp(x): 0 for x = 0, else the power of two with ufp(x) <= |x| < 2 ufp(x).
inline double ufp(double x) {
    if (x == 0.0) return 0.0;
    if (!std::isfinite(x)) throw std::domain_error("ufp: non-finite");
    return std::ldexp(1.0, std::ilogb(x));
}

// log2f model: extended-precision log2 then one fp32 nearest rounding.
// Satisfies |log2_fp32(x) - log2 x| <= 4 u32 log2 x for x >= 1 with margin.
inline float log2_fp32(float x) {
    if (!(x > 0.0f) || !std::isfinite(x)) throw std::domain_error("log2_fp32: requires finite x > 0");
    return static_cast<float>(std::log2(static_cast<double>(x)));
}

// Round-up conversion of a nonnegative integer to fp32 (round toward +inf).
inline float fp32_round_up(std::int64_t v) {
    if (v < 0 || v > (1ll << 53)) throw std::range_error("fp32_round_up: out of supported range");
    float f = static_cast<float>(v);                        // nearest
    if (static_cast<double>(f) < static_cast<double>(v))
        f = std::nextafterf(f, std::numeric_limits<float>::infinity());
    return f;
}

} // namespace oz2
