#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <oz2/emulate.hpp>
#include <oz2/gen.hpp>
#include <oz2/oracle.hpp>
#include <oz2/selfcheck.hpp>

#include <cstring>

using namespace oz2;

TEST_CASE("1x1 unit product: exact at N=2, within the error bound always") {
    // Hand trace for N=2: mu = nu = 7, A' = B' = 128, W = (0, 64),
    // C1 = 256*64 = 16384, Q = round(16384/65280) = 0, C'' = 16384,
    // C = 2^-14 * 16384 = 1 with every step exact.
    Matrix<double> one(1, 1, 1.0);
    CHECK(os_ii(one, one, 2).C(0, 0) == 1.0);
    Matrix<float> onef(1, 1, 1.0f);
    CHECK(os_ii(onef, onef, 2).C(0, 0) == 1.0f);

    // For larger N the final-reduction FMA chain may round (that is what
    // R_b budgets for); the result stays within the evaluated tight bound,
    // which the instance battery asserts, and within a few ulps of 1.
    for (int n : {10, 30, 49}) {
        const auto res = os_ii(one, one, n);
        CHECK(std::abs(res.C(0, 0) - 1.0) <= 0x1p-40);
        const auto ic = selfcheck::check_instance(one, one, n);
        CHECK(ic.total_violations() == 0);
    }
    for (int n : {10, 16}) {
        const auto res = os_ii(onef, onef, n);
        CHECK(std::abs(static_cast<double>(res.C(0, 0)) - 1.0) <= 0x1p-18);
        const auto ic = selfcheck::check_instance(onef, onef, n);
        CHECK(ic.total_violations() == 0);
    }
}

TEST_CASE("identity times B stays within the error bound") {
    Matrix<double> eye(6, 6);
    for (int i = 0; i < 6; ++i) eye(i, i) = 1.0;
    const auto b = gen_matrix<double>(6, 6, 1.0, 0x77);
    const auto ic = selfcheck::check_instance(eye, b, 20);
    CHECK(ic.total_violations() == 0);
    CHECK(!ic.range_error);
}

TEST_CASE("full property battery on random instances, both modes") {
    for (double phi : {0.0, 4.0}) {
        const auto a64 = gen_matrix<double>(7, 20, phi, 0x88 + static_cast<unsigned>(phi));
        const auto b64 = gen_matrix<double>(20, 6, phi, 0x99 + static_cast<unsigned>(phi));
        for (int n : {2, 16, 49}) {
            const auto ic = selfcheck::check_instance(a64, b64, n);
            CHECK(ic.total_violations() == 0);
            CHECK(!ic.range_error);
        }
        const auto a32 = gen_matrix<float>(7, 20, phi, 0xaa + static_cast<unsigned>(phi));
        const auto b32 = gen_matrix<float>(20, 6, phi, 0xbb + static_cast<unsigned>(phi));
        for (int n : {2, 9, 16}) {
            const auto ic = selfcheck::check_instance(a32, b32, n);
            CHECK(ic.total_violations() == 0);
            CHECK(!ic.range_error);
        }
    }
}

TEST_CASE("fp32 mode raises a range error beyond the format ceiling") {
    const auto a = gen_matrix<float>(3, 8, 0.5, 0xcc);
    const auto b = gen_matrix<float>(8, 3, 0.5, 0xdd);
    CHECK_THROWS_AS(os_ii(a, b, fp32_safe_moduli_max() + 1, false), std::range_error);
    const auto ic = selfcheck::check_instance(a, b, 30);
    CHECK(ic.range_error);
}

TEST_CASE("deterministic across thread counts") {
    const auto a = gen_matrix<double>(9, 40, 2.0, 0xee);
    const auto b = gen_matrix<double>(40, 9, 2.0, 0xff);
    const int saved = worker_threads();
    worker_threads() = 1;
    const auto r1 = os_ii(a, b, 25);
    worker_threads() = 8;
    const auto r8 = os_ii(a, b, 25);
    worker_threads() = saved;
    REQUIRE(r1.C.same_shape(r8.C));
    CHECK(std::memcmp(r1.C.data(), r8.C.data(),
                      sizeof(double) * static_cast<std::size_t>(r1.C.size())) == 0);
}

TEST_CASE("power-of-two inverse scaling is exact in the normal range") {
    const auto a = gen_matrix<double>(4, 12, 1.0, 0x1234);
    const auto b = gen_matrix<double>(12, 4, 1.0, 0x4321);
    const auto res = os_ii(a, b, 12, /*keep_intermediates=*/true);
    REQUIRE(!res.subnormal);
    for (std::int64_t i = 0; i < 4; ++i)
        for (std::int64_t j = 0; j < 4; ++j) {
            const double back = std::ldexp(std::ldexp(res.C(i, j), res.scaling.mu[static_cast<std::size_t>(i)]),
                                           res.scaling.nu[static_cast<std::size_t>(j)]);
            CHECK(back == res.crt.Cpp64(i, j));
        }
}

TEST_CASE("intermediates are dropped unless requested") {
    Matrix<double> one(1, 1, 1.0);
    const auto lean = os_ii(one, one, 5, false);
    CHECK(lean.crt.W.empty());
    CHECK(lean.crt.C1.empty());
    CHECK(lean.scaling.Aprime.empty());
    const auto full = os_ii(one, one, 5, true);
    CHECK(full.crt.W.size() == 5);
    CHECK(!full.scaling.Aprime.empty());
}

TEST_CASE("preconditions are rejected") {
    Matrix<double> a(2, 3), b(3, 2);
    a(0, 0) = 1.0; a(0, 1) = 1.0; a(0, 2) = 1.0;   // row 1 of A is zero
    for (int h = 0; h < 3; ++h) { b(h, 0) = 1.0; b(h, 1) = 1.0; }
    CHECK_THROWS_AS(os_ii(a, b, 5), std::domain_error);
    Matrix<double> bad(4, 2, 1.0);
    CHECK_THROWS_AS(os_ii(a, bad, 5), std::invalid_argument);
}
