// moduli.hpp — per-N constant tables for the CRT emulation: moduli p_l,
// modular inverses q_l of P/p_l, the big-integer product P, its double-double
// approximation P1+P2, P_inv, the double-word splits s_l1+s_l2 of P/p_l*q_l,
// rho = sum floor(p_l/2), and the fp32 scaling constant P'.
#pragma once

#include "mp.hpp"
#include "softfp.hpp"

#include <gmpxx.h>

#include <array>
#include <type_traits>
#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oz2 {

enum class Prec { F32, F64 };

inline const char* prec_name(Prec p) { return p == Prec::F32 ? "fp32" : "fp64"; }

template <class T>
inline constexpr Prec prec_of = std::is_same_v<T, float> ? Prec::F32 : Prec::F64;

// Fixed 49-entry moduli list; pairwise coprime, all <= 256.
inline constexpr std::array<int, 49> kModuli = {
    256, 255, 253, 251, 247, 241, 239, 233, 229, 227,
    223, 217, 211, 199, 197, 193, 191, 181, 179, 173,
    167, 163, 157, 151, 149, 139, 137, 131, 127, 113,
    109, 107, 103, 101,  97,  89,  83,  79,  73,  71,
     67,  61,  59,  53,  47,  43,  41,  37,  29};

inline constexpr int kMaxModuli = 49;

// Modular multiplicative inverse by extended Euclid; requires gcd(a, p) = 1.
inline long mod_inverse(const mpz_class& a, long p) {
    if (p < 2) throw std::domain_error("mod_inverse: p must be >= 2");
    mpz_class ar;
    mpz_mod_ui(ar.get_mpz_t(), a.get_mpz_t(), static_cast<unsigned long>(p));
    long r0 = p, r1 = ar.get_si();
    long t0 = 0, t1 = 1;
    while (r1 != 0) {
        const long q = r0 / r1;
        r0 -= q * r1; std::swap(r0, r1);
        t0 -= q * t1; std::swap(t0, t1);
    }
    if (r0 != 1) throw std::domain_error("mod_inverse: inputs not coprime");
    if (t0 < 0) t0 += p;
    return t0;
}

// Splits x > 0 into (head, tail): head carries the top `beta` bits of x,
// truncated toward zero and exactly representable in fp64; tail is the fp64
// nearest value of the exact remainder x - head.
inline std::pair<double, double> split_upper_bits(const mpz_class& x, int beta) {
    if (beta <= 0 || beta > 53) throw std::domain_error("split_upper_bits: beta out of (0, 53]");
    if (x <= 0) throw std::domain_error("split_upper_bits: x must be positive");
    const long len = static_cast<long>(mpz_sizeinbase(x.get_mpz_t(), 2));
    const long shift = len - beta;
    if (shift <= 0) return {to_fp64(Dyadic::from_mpz(x)), 0.0};   // x has <= beta bits: exact
    mpz_class head = (x >> static_cast<unsigned long>(shift)) << static_cast<unsigned long>(shift);
    mpz_class rem = x - head;
    return {to_fp64(Dyadic::from_mpz(head)), to_fp64(Dyadic::from_mpz(rem), Rnd::Nearest)};
}

inline int ceil_log2_long(long v) {
    if (v < 1) throw std::domain_error("ceil_log2_long: v < 1");
    int bits = 0;
    while ((1l << bits) < v) ++bits;
    return bits;
}

struct ModuliTable {
    int n = 0;
    Prec mode = Prec::F64;
    std::vector<int> p;          // moduli
    std::vector<int> q;          // inverses of P/p_l mod p_l, 0 < q_l < p_l
    mpz_class P;                 // product of moduli
    std::vector<mpz_class> r;    // exact P/p_l * q_l
    long rho = 0;                // sum floor(p_l/2)
    double P1 = 0, P2 = 0;       // double-double of P (P2 = 0 in fp32 mode)
    double P_inv = 0;            // fp64 nearest of 1/P
    std::vector<int> beta;       // bits kept in s1 (fp64 mode; 0 in fp32 mode)
    std::vector<double> s1, s2;  // double-word splits of r_l (s2 = 0 in fp32 mode)
    float P_prime = 0;           // single_down(log2(P-1)/2 - 0.5)
};

inline ModuliTable build_table(int n, Prec mode) {
    if (n < 2 || n > kMaxModuli) throw std::domain_error("build_table: N out of [2, 49]");
    ModuliTable t;
    t.n = n;
    t.mode = mode;
    t.p.assign(kModuli.begin(), kModuli.begin() + n);

    t.P = 1;
    for (int pl : t.p) t.P *= pl;
    for (int pl : t.p) t.rho += pl / 2;

    t.q.resize(n);
    t.r.resize(n);
    for (int l = 0; l < n; ++l) {
        const mpz_class m = t.P / t.p[l];
        t.q[l] = static_cast<int>(mod_inverse(m, t.p[l]));
        t.r[l] = m * t.q[l];
    }

    t.P1 = to_fp64(Dyadic::from_mpz(t.P));
    if (mode == Prec::F64) {
        const mpz_class diff = t.P - Dyadic(t.P1).to_mpz();
        t.P2 = to_fp64(Dyadic::from_mpz(diff));
    }
    t.P_inv = rational_to_fp64_nearest(mpq_class(mpz_class(1), t.P));

    t.beta.assign(n, 0);
    t.s1.resize(n);
    t.s2.assign(n, 0.0);
    if (mode == Prec::F64) {
        long max_log2r = 0;
        for (int l = 0; l < n; ++l)
            max_log2r = std::max(max_log2r,
                                 static_cast<long>(mpz_sizeinbase(t.r[l].get_mpz_t(), 2)) - 1);
        const int clr = ceil_log2_long(t.rho);
        for (int l = 0; l < n; ++l) {
            const long log2r = static_cast<long>(mpz_sizeinbase(t.r[l].get_mpz_t(), 2)) - 1;
            const int b = static_cast<int>(53 - clr + log2r - max_log2r);
            t.beta[l] = b;
            auto [head, tail] = split_upper_bits(t.r[l], b);
            t.s1[l] = head;
            t.s2[l] = tail;
        }
    } else {
        for (int l = 0; l < n; ++l) t.s1[l] = to_fp64(Dyadic::from_mpz(t.r[l]));
    }

    t.P_prime = p_prime_fp32(t.P);
    return t;
}

// Immutable registry; each (N, mode) table is built once and shared.
inline const ModuliTable& table_for(int n, Prec mode) {
    static std::map<std::pair<int, int>, ModuliTable> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    const auto key = std::make_pair(n, static_cast<int>(mode));
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, build_table(n, mode)).first;
    return it->second;
}

// Largest N whose full CRT range fits fp32: P/2 bounds |A'B'| (and hence C''),
// so single(C'') stays finite iff P <= 2 * maxfloat.
inline int fp32_safe_moduli_max() {
    static const int value = [] {
        const mpz_class limit = (mpz_class((1 << 24) - 1) << 105);  // 2 * (2^24-1) * 2^104
        mpz_class prod = 1;
        int n = 0;
        for (int pl : kModuli) {
            prod *= pl;
            if (prod > limit) break;
            ++n;
        }
        return n;
    }();
    return value;
}

} // namespace oz2
