// dyadic.hpp — exact dyadic rationals: value = mantissa * 2^exponent with a
// big-integer mantissa. Closed under +, -, * with no rounding, so finite FP
// values and their products/sums are represented exactly.
//
// Canonical form: mantissa is odd or zero; zero has exponent 0.
#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

namespace oz2 {

class Dyadic {
public:
    Dyadic() : mant_(0), exp_(0) {}

    Dyadic(const mpz_class& mant, long exp) : mant_(mant), exp_(exp) { normalize(); }
    Dyadic(mpz_class&& mant, long exp) : mant_(std::move(mant)), exp_(exp) { normalize(); }

    explicit Dyadic(long v) : mant_(v), exp_(0) { normalize(); }

    // Exact conversion; rejects non-finite input.
    explicit Dyadic(double v) {
        if (!std::isfinite(v)) throw std::domain_error("Dyadic: non-finite value");
        if (v == 0.0) { mant_ = 0; exp_ = 0; return; }
        int e;
        const double f = std::frexp(v, &e);         // v = f * 2^e, |f| in [0.5, 1)
        const double scaled = std::ldexp(f, 53);    // integer, |.| in [2^52, 2^53)
        mant_ = static_cast<long>(scaled);
        exp_ = e - 53;
        normalize();
    }
    explicit Dyadic(float v) : Dyadic(static_cast<double>(v)) {}

    static Dyadic from_mpz(const mpz_class& z) { return Dyadic(z, 0); }

    const mpz_class& mantissa() const { return mant_; }
    long exponent() const { return exp_; }

    bool is_zero() const { return mant_ == 0; }
    int sign() const { return sgn(mant_); }

    Dyadic abs() const { return Dyadic(::abs(mant_), exp_); }

    // Shift by a power of two (exact).
    Dyadic ldexp(long k) const { return is_zero() ? Dyadic() : Dyadic(mant_, exp_ + k); }

    friend Dyadic operator-(const Dyadic& a) { return Dyadic(-a.mant_, a.exp_); }

    friend Dyadic operator+(const Dyadic& a, const Dyadic& b) {
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        const long e = std::min(a.exp_, b.exp_);
        mpz_class m = (a.mant_ << static_cast<unsigned long>(a.exp_ - e)) +
                      (b.mant_ << static_cast<unsigned long>(b.exp_ - e));
        return Dyadic(std::move(m), e);
    }
    friend Dyadic operator-(const Dyadic& a, const Dyadic& b) { return a + (-b); }

    friend Dyadic operator*(const Dyadic& a, const Dyadic& b) {
        if (a.is_zero() || b.is_zero()) return Dyadic();
        // odd * odd = odd: already canonical
        Dyadic r;
        r.mant_ = a.mant_ * b.mant_;
        r.exp_ = a.exp_ + b.exp_;
        return r;
    }

    Dyadic& operator+=(const Dyadic& b) { return *this = *this + b; }
    Dyadic& operator-=(const Dyadic& b) { return *this = *this - b; }
    Dyadic& operator*=(const Dyadic& b) { return *this = *this * b; }

    // -1 / 0 / +1 ordering against another dyadic.
    int cmp(const Dyadic& b) const {
        const int sa = sign(), sb = b.sign();
        if (sa != sb) return sa < sb ? -1 : 1;
        if (sa == 0) return 0;
        return (*this - b).sign();
    }
    friend bool operator==(const Dyadic& a, const Dyadic& b) { return a.mant_ == b.mant_ && a.exp_ == b.exp_; }
    friend bool operator<(const Dyadic& a, const Dyadic& b) { return a.cmp(b) < 0; }
    friend bool operator<=(const Dyadic& a, const Dyadic& b) { return a.cmp(b) <= 0; }
    friend bool operator>(const Dyadic& a, const Dyadic& b) { return a.cmp(b) > 0; }
    friend bool operator>=(const Dyadic& a, const Dyadic& b) { return a.cmp(b) >= 0; }

    // True when the value is an integer; exp_ >= 0 in canonical form suffices.
    bool is_integer() const { return is_zero() || exp_ >= 0; }

    // Exact integer value; throws if fractional.
    mpz_class to_mpz() const {
        if (is_zero()) return mpz_class(0);
        if (exp_ < 0) throw std::domain_error("Dyadic::to_mpz: not an integer");
        return mant_ << static_cast<unsigned long>(exp_);
    }

    // Exact rational value.
    mpq_class to_mpq() const {
        if (is_zero()) return mpq_class(0);
        if (exp_ >= 0) return mpq_class(mant_ << static_cast<unsigned long>(exp_));
        mpq_class q(mant_, mpz_class(1) << static_cast<unsigned long>(-exp_));
        q.canonicalize();
        return q;
    }

    // floor(log2 |x|); precondition: nonzero.
    long floor_log2_abs() const {
        if (is_zero()) throw std::domain_error("Dyadic::floor_log2_abs: zero");
        const mpz_class a = ::abs(mant_);
        return static_cast<long>(mpz_sizeinbase(a.get_mpz_t(), 2)) - 1 + exp_;
    }

private:
    void normalize() {
        if (mant_ == 0) { exp_ = 0; return; }
        const mp_bitcnt_t tz = mpz_scan1(mant_.get_mpz_t(), 0);
        if (tz > 0) {
            mant_ >>= tz;
            exp_ += static_cast<long>(tz);
        }
    }

    mpz_class mant_;
    long exp_;
};

} // namespace oz2
