// mp.hpp — thin RAII wrapper over MPFR for the few extended-precision,
// directed-rounding evaluations the library needs (bound certificates and the
// scaling constant P'). Rounding direction is explicit at every operation.
#pragma once

#include <gmpxx.h>
#include <mpfr.h>

#include <stdexcept>
#include <utility>

namespace oz2 {

class BigFloat {
public:
    explicit BigFloat(mpfr_prec_t prec = 128) { mpfr_init2(v_, prec); mpfr_set_zero(v_, 1); }
    BigFloat(const BigFloat& o) { mpfr_init2(v_, mpfr_get_prec(o.v_)); mpfr_set(v_, o.v_, MPFR_RNDN); }
    BigFloat(BigFloat&& o) noexcept { mpfr_init2(v_, mpfr_get_prec(o.v_)); mpfr_swap(v_, o.v_); }
    BigFloat& operator=(const BigFloat& o) {
        if (this != &o) { mpfr_set_prec(v_, mpfr_get_prec(o.v_)); mpfr_set(v_, o.v_, MPFR_RNDN); }
        return *this;
    }
    BigFloat& operator=(BigFloat&& o) noexcept {
        if (this != &o) mpfr_swap(v_, o.v_);
        return *this;
    }
    ~BigFloat() { mpfr_clear(v_); }

    mpfr_ptr get() { return v_; }
    mpfr_srcptr get() const { return v_; }

    static BigFloat from(const mpz_class& z, mpfr_prec_t prec, mpfr_rnd_t rnd) {
        BigFloat r(prec);
        mpfr_set_z(r.v_, z.get_mpz_t(), rnd);
        return r;
    }
    static BigFloat from(double d, mpfr_prec_t prec = 128) {
        BigFloat r(prec);
        mpfr_set_d(r.v_, d, MPFR_RNDN);                      // exact: prec >= 53
        return r;
    }
    static BigFloat from(const mpq_class& q, mpfr_prec_t prec, mpfr_rnd_t rnd) {
        BigFloat r(prec);
        mpfr_set_q(r.v_, q.get_mpq_t(), rnd);
        return r;
    }

    double to_double(mpfr_rnd_t rnd) const { return mpfr_get_d(v_, rnd); }
    float to_float(mpfr_rnd_t rnd) const { return mpfr_get_flt(v_, rnd); }

    int cmp(const BigFloat& o) const { return mpfr_cmp(v_, o.v_); }
    int cmp_z(const mpz_class& z) const { return mpfr_cmp_z(v_, z.get_mpz_t()); }

private:
    mpfr_t v_;
};

// Correctly rounded fp64 nearest of an exact rational (e.g. 1/P).
inline double rational_to_fp64_nearest(const mpq_class& q) {
    BigFloat t = BigFloat::from(q, 53, MPFR_RNDN);
    return t.to_double(MPFR_RNDN);                           // already 53-bit: exact
}

// single_down(log2(P-1)/2 - 0.5), evaluated as one rounding of the real
// expression. Verified by bracketing: the down- and up-rounded extended
// evaluations must round to the same fp32, else precision is raised.
inline float p_prime_fp32(const mpz_class& P) {
    if (P < 2) throw std::domain_error("p_prime_fp32: P < 2");
    const mpz_class pm1 = P - 1;
    for (mpfr_prec_t prec = 192; prec <= 1536; prec *= 2) {
        BigFloat lo(prec), hi(prec);
        mpfr_set_z(lo.get(), pm1.get_mpz_t(), MPFR_RNDD);
        mpfr_log2(lo.get(), lo.get(), MPFR_RNDD);
        mpfr_div_2ui(lo.get(), lo.get(), 1, MPFR_RNDD);
        mpfr_sub_d(lo.get(), lo.get(), 0.5, MPFR_RNDD);
        mpfr_set_z(hi.get(), pm1.get_mpz_t(), MPFR_RNDU);
        mpfr_log2(hi.get(), hi.get(), MPFR_RNDU);
        mpfr_div_2ui(hi.get(), hi.get(), 1, MPFR_RNDU);
        mpfr_sub_d(hi.get(), hi.get(), 0.5, MPFR_RNDU);
        const float flo = lo.to_float(MPFR_RNDD);
        const float fhi = hi.to_float(MPFR_RNDD);
        if (flo == fhi) return flo;
    }
    throw std::runtime_error("p_prime_fp32: bracketing did not converge");
}

// single_down(-0.5 / (1 - 4 u32)): the fp32 coefficient of Algorithm step
// computing mu/nu. Exact rational, one downward rounding.
inline float scaling_coeff_fp32() {
    const mpq_class q(-mpz_class(1) << 21, (mpz_class(1) << 22) - 1);  // -2^21/(2^22-1)
    BigFloat t = BigFloat::from(q, 24, MPFR_RNDD);
    return t.to_float(MPFR_RNDD);
}

} // namespace oz2
