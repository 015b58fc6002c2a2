#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <oz2/bounds.hpp>
#include <oz2/emulate.hpp>
#include <oz2/gen.hpp>
#include <oz2/oracle.hpp>

#include <cmath>

using namespace oz2;

namespace {

template <class T>
ExponentStats stats_for(const Matrix<T>& a, const Matrix<T>& b) {
    const auto mu_prime = row_pre_exponents(a);
    const auto nu_prime = col_pre_exponents(b);
    const ClearanceProduct cp = clearance_product(ceil_abs_scale_rows(a, mu_prime),
                                                  ceil_abs_scale_cols(b, nu_prime));
    return exponent_stats(a, b, cp.Cbar);
}

} // namespace

TEST_CASE("exponent stats basics") {
    Matrix<double> a(2, 2), b(2, 2);
    a(0, 0) = 1.0; a(0, 1) = 0.5; a(1, 0) = -0.3; a(1, 1) = 0.1;
    b(0, 0) = 2.0; b(0, 1) = 8.0; b(1, 0) = 1.0; b(1, 1) = -0.5;
    const ExponentStats st = stats_for(a, b);
    CHECK(st.alpha[0] == 0);
    CHECK(st.alpha[1] == -2);
    CHECK(st.beta[0] == 1);
    CHECK(st.beta[1] == 3);
    CHECK(st.k == 2);
    for (auto v : st.cbar_rowmax) CHECK(v >= 1);
}

TEST_CASE("t^2 relation holds exactly in rationals") {
    for (int n : {2, 20, 49}) {
        const ModuliTable& t = table_for(n, Prec::F64);
        const mpq_class t_sq(mpz_class(1), (t.P - 1) << 5);   // t^2 = 1/(2^5 (P-1))
        CHECK(t_sq * mpq_class((t.P - 1) << 5) == 1);
        // N=2 numeric anchor, from direct extended-precision evaluation:
        // t = 1/sqrt(2^5 * 65279) = 6.9189192877e-4
        if (n == 2) {
            const double approx = 1.0 / std::sqrt(32.0 * 65279.0);
            CHECK(std::abs(approx - 6.9189192877e-4) < 1e-12);
        }
    }
}

TEST_CASE("R and r constants match direct rational evaluation") {
    {
        const ModuliTable& t = table_for(20, Prec::F64);
        const mpq_class u64(mpz_class(1), mpz_class(1) << 53);
        const int clr = ceil_log2_long(t.rho);   // rho = sum floor(p/2)
        const mpq_class expect = (1 + 3 * u64) * mpq_class(mpz_class(1) << (1 + clr)) * 22 *
                                 u64 * u64 * t.rho * mpq_class(t.P);
        CHECK(detail::r_const_exact(t) == expect);
    }
    {
        const ModuliTable& t = table_for(2, Prec::F64);
        REQUIRE(t.rho == 255);
        const mpq_class u64(mpz_class(1), mpz_class(1) << 53);
        // r64 = (1+3u64) 2^(1+ceil(log2 255)) * 4 * u64^2 * 255 * 65280 + (3/2) u64 * 65280
        const mpq_class expect =
            (1 + 3 * u64) * mpq_class(mpz_class(1) << 9) * 4 * u64 * u64 * 255 * 65280 +
            mpq_class(3, 2) * u64 * 65280;
        CHECK(detail::r_cheap_exact(t) == expect);
    }
    {
        const ModuliTable& t = table_for(5, Prec::F32);
        const mpq_class u32(1, 1 << 24), u64(mpz_class(1), mpz_class(1) << 53);
        CHECK(detail::r_const_exact(t) == (1 + u32) * 7 * u64 * t.rho * mpq_class(t.P));
        CHECK(detail::r_cheap_exact(t) ==
              (1 + u32) * 7 * u64 * t.rho * mpq_class(t.P) + u32 * mpq_class(t.P) / 2);
    }
}

TEST_CASE("tight bound is dominated by the cheap bound entrywise") {
    for (double phi : {0.0, 2.0}) {
        const auto a = gen_matrix<double>(6, 24, phi, 0x61 + static_cast<unsigned>(phi));
        const auto b = gen_matrix<double>(24, 6, phi, 0x62 + static_cast<unsigned>(phi));
        for (int n : {2, 15, 49}) {
            const ModuliTable& t = table_for(n, Prec::F64);
            const auto res = os_ii(a, b, n, true);
            const ExponentStats st = exponent_stats(a, b, res.scaling.Cbar);
            const AbsGemm ag = exact_abs_gemm(res.scaling.Aprime, res.scaling.Bprime);
            const BoundResult tight = bound_tight(st, ag.abs_ab, a, b, t);
            const BoundResult cheap = bound_cheap(st, a, b, t);
            for (std::int64_t i = 0; i < 6; ++i)
                for (std::int64_t j = 0; j < 6; ++j) {
                    CHECK(tight.bound(i, j) > 0.0);
                    CHECK(tight.bound(i, j) <= cheap.bound(i, j));
                }
        }
    }
}

TEST_CASE("scaling A by 2 shifts alpha' by exactly one") {
    const auto a = gen_matrix<double>(5, 16, 1.0, 0x71);
    const auto b = gen_matrix<double>(16, 5, 1.0, 0x72);
    Matrix<double> a2 = a;
    for (std::int64_t i = 0; i < a.rows(); ++i)
        for (std::int64_t h = 0; h < a.cols(); ++h) a2(i, h) = 2.0 * a(i, h);
    const ExponentStats st = stats_for(a, b);
    const ExponentStats st2 = stats_for(a2, b);
    for (std::size_t i = 0; i < st.alpha.size(); ++i) {
        CHECK(st2.alpha[i] == st.alpha[i] + 1);
        CHECK(st2.cbar_rowmax[i] == st.cbar_rowmax[i]);   // Abar invariant under mu' shift
    }
}

TEST_CASE("suggest_n") {
    const auto a = gen_matrix<double>(8, 32, 1.0, 0x81);
    const auto b = gen_matrix<double>(32, 8, 1.0, 0x82);

    const SuggestResult loose = suggest_n(a, b, std::numeric_limits<double>::infinity());
    CHECK(loose.achievable);
    CHECK(loose.n == 2);

    const SuggestResult hopeless = suggest_n(a, b, 1e-300);
    CHECK(!hopeless.achievable);

    // monotone: suggested N never increases as the target loosens
    int prev = kMaxModuli;
    for (double target : {1e-20, 1e-14, 1e-8, 1e-2, 1e4}) {
        const SuggestResult r = suggest_n(a, b, target);
        if (!r.achievable) continue;
        CHECK(r.n <= prev);
        prev = r.n;
        // the reported bound meets the target, and the suggestion is minimal
        CHECK(r.bound_max <= target);
    }
    CHECK_THROWS_AS(suggest_n(a, b, 0.0), std::domain_error);
}

TEST_CASE("suggest_n respects the fp32 ceiling") {
    const auto a = gen_matrix<float>(4, 16, 0.5, 0x91);
    const auto b = gen_matrix<float>(16, 4, 0.5, 0x92);
    const SuggestResult r = suggest_n(a, b, 1e-300);
    CHECK(!r.achievable);   // and never suggests an N the format cannot run
    const SuggestResult ok = suggest_n(a, b, 1e-3);
    if (ok.achievable) CHECK(ok.n <= fp32_safe_moduli_max());
}
