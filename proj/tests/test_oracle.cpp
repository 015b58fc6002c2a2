#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <oz2/gen.hpp>
#include <oz2/oracle.hpp>

#include <algorithm>
#include <numeric>
#include <vector>

using namespace oz2;

TEST_CASE("exact gemm basics") {
    Matrix<double> eye(3, 3);
    for (int i = 0; i < 3; ++i) eye(i, i) = 1.0;
    const auto b = gen_matrix<double>(3, 4, 1.0, 0x31);
    const DyadicMatrix c = exact_gemm(eye, b);
    for (std::int64_t i = 0; i < 3; ++i)
        for (std::int64_t j = 0; j < 4; ++j) CHECK(c(i, j) == Dyadic(b(i, j)));

    Matrix<double> x(1, 1, 1.5), y(1, 1, 1.25);
    CHECK(to_fp64(exact_gemm(x, y)(0, 0)) == 1.875);
}

// Independent second method: rational GEMM over mpq.
TEST_CASE("dyadic gemm cross-checked against rational arithmetic") {
    const auto a = gen_matrix<double>(8, 8, 3.0, 0x41);
    const auto b = gen_matrix<double>(8, 8, 3.0, 0x42);
    const DyadicMatrix c = exact_gemm(a, b);
    for (std::int64_t i = 0; i < 8; ++i)
        for (std::int64_t j = 0; j < 8; ++j) {
            mpq_class acc(0);
            for (std::int64_t h = 0; h < 8; ++h)
                acc += Dyadic(a(i, h)).to_mpq() * Dyadic(b(h, j)).to_mpq();
            CHECK(c(i, j).to_mpq() == acc);
        }
}

TEST_CASE("exact accumulation is order-independent") {
    const auto a = gen_matrix<double>(1, 32, 4.0, 0x51);
    const auto b = gen_matrix<double>(32, 1, 4.0, 0x52);
    const Dyadic forward = exact_gemm(a, b)(0, 0);
    std::vector<int> order(32);
    std::iota(order.begin(), order.end(), 0);
    Xoshiro256ss rng(0x53);
    for (int rep = 0; rep < 5; ++rep) {
        for (int h = 31; h > 0; --h)
            std::swap(order[static_cast<std::size_t>(h)],
                      order[rng.next() % static_cast<std::uint64_t>(h + 1)]);
        Dyadic acc;
        for (int h : order) acc += Dyadic(a(0, h)) * Dyadic(b(h, 0));
        CHECK(acc == forward);
    }
}

TEST_CASE("exact_abs_gemm") {
    Matrix<double> z(2, 2), z2(2, 2);
    const AbsGemm zero = exact_abs_gemm(z, z2);
    CHECK(zero.abs_a_abs_b(0, 0) == 0);
    CHECK(zero.abs_ab(1, 1) == 0);

    Matrix<double> a(1, 1, -3.0), b(1, 1, 5.0);
    const AbsGemm g = exact_abs_gemm(a, b);
    CHECK(g.abs_a_abs_b(0, 0) == 15);
    CHECK(g.abs_ab(0, 0) == 15);
    CHECK(g.ab(0, 0) == -15);

    // |A'B'| <= |A'||B'| always; strict when signs cancel
    Matrix<double> a2(1, 2), b2(2, 1);
    a2(0, 0) = 7; a2(0, 1) = -7;
    b2(0, 0) = 1; b2(1, 0) = 1;
    const AbsGemm g2 = exact_abs_gemm(a2, b2);
    CHECK(g2.ab(0, 0) == 0);
    CHECK(g2.abs_a_abs_b(0, 0) == 14);
}

TEST_CASE("rational rounding helper: ties to even") {
    CHECK(round_rational_nearest_even(mpz_class(1), mpz_class(2)) == 0);    // 0.5 -> 0
    CHECK(round_rational_nearest_even(mpz_class(3), mpz_class(2)) == 2);    // 1.5 -> 2
    CHECK(round_rational_nearest_even(mpz_class(-1), mpz_class(2)) == 0);   // -0.5 -> 0
    CHECK(round_rational_nearest_even(mpz_class(255), mpz_class(256)) == 1);
    CHECK(round_rational_nearest_even(mpz_class(100), mpz_class(8)) == 12); // 12.5 -> 12
}

TEST_CASE("error matrix is a conservative round-up") {
    Matrix<double> c(1, 2);
    c(0, 0) = 1.0;
    c(0, 1) = 1.0;
    DyadicMatrix exact(1, 2);
    exact(0, 0) = Dyadic(1.0);
    exact(0, 1) = Dyadic(1.0) + Dyadic(0x1p-52);
    const Matrix<double> err = error_matrix(c, exact);
    CHECK(err(0, 0) == 0.0);
    CHECK(err(0, 1) == 0x1p-52);

    // a difference that is not fp64-representable must round up, never down
    DyadicMatrix fine(1, 1);
    fine(0, 0) = Dyadic(1.0) + Dyadic(0x1p-80);
    Matrix<double> one(1, 1, 1.0);
    const double e = error_matrix(one, fine)(0, 0);
    CHECK(Dyadic(e) >= Dyadic(0x1p-80));
}
