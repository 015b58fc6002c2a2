// experiment.hpp — error-vs-bound experiment harness: seeded matrix
// generation, a sweep over moduli counts, bound evaluation against the exact
// oracle, a native working-precision GEMM reference, and CSV emission.
#pragma once

#include "bounds.hpp"
#include "emulate.hpp"
#include "gen.hpp"
#include "matrix.hpp"
#include "oracle.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

namespace oz2 {

struct ExperimentConfig {
    std::int64_t m = 64, n = 64, k = 1024;
    double phi = 0.5;
    Prec mode = Prec::F64;
    std::vector<int> n_list;
    std::uint64_t seed = 1;
    int trials = 1;
};

struct ExperimentRow {
    int n = 0;
    double est_max = 0, est_min = 0;    // tight bound extrema
    double est2_max = 0, est2_min = 0;  // cheap bound extrema
    double err_max = 0, err_min = 0;    // observed |AB - C| extrema
    double err_native_max = 0;          // max error of the plain native GEMM
};

inline void validate_config(const ExperimentConfig& cfg) {
    if (cfg.m < 1 || cfg.n < 1 || cfg.k < 1) throw std::domain_error("experiment: dims must be positive");
    if (cfg.k > kMaxInnerDim) throw std::domain_error("experiment: k exceeds 2^17");
    if (cfg.phi < 0) throw std::domain_error("experiment: phi must be nonnegative");
    if (cfg.trials < 1) throw std::domain_error("experiment: trials must be >= 1");
    if (cfg.n_list.empty()) throw std::domain_error("experiment: empty n-list");
    for (int n : cfg.n_list) {
        if (n < 2 || n > kMaxModuli) throw std::domain_error("experiment: n-list entry out of [2, 49]");
        if (cfg.mode == Prec::F32 && n > fp32_safe_moduli_max())
            throw std::domain_error("experiment: N=" + std::to_string(n) +
                                    " exceeds the fp32-safe ceiling " +
                                    std::to_string(fp32_safe_moduli_max()) +
                                    " (mode/moduli-count mismatch)");
    }
}

// Plain working-precision GEMM: sequential triple loop, separate multiply and
// add, round-to-nearest-even. The declared reference for err_native.
template <class T>
Matrix<T> native_gemm(const Matrix<T>& a, const Matrix<T>& b) {
    require_dims(a.cols() == b.rows(), "native_gemm inner dimension");
    Matrix<T> c(a.rows(), b.cols());
    for (std::int64_t i = 0; i < a.rows(); ++i)
        for (std::int64_t j = 0; j < b.cols(); ++j) {
            T acc = 0;
            for (std::int64_t h = 0; h < a.cols(); ++h) acc += a(i, h) * b(h, j);
            c(i, j) = acc;
        }
    return c;
}

inline std::pair<double, double> matrix_extrema(const Matrix<double>& m) {
    double mx = -std::numeric_limits<double>::infinity();
    double mn = std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < m.rows(); ++i)
        for (std::int64_t j = 0; j < m.cols(); ++j) {
            mx = std::max(mx, m(i, j));
            mn = std::min(mn, m(i, j));
        }
    return {mx, mn};
}

namespace detail {

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t trial, std::uint64_t role) {
    std::uint64_t s = seed;
    (void)splitmix64(s);
    s ^= 0x5851f42d4c957f2dull * (trial + 1) + 0x14057b7ef767814full * (role + 1);
    return splitmix64(s);
}

template <class T>
std::vector<ExperimentRow> run_experiment_typed(const ExperimentConfig& cfg) {
    std::vector<ExperimentRow> rows(cfg.n_list.size());
    for (std::size_t idx = 0; idx < cfg.n_list.size(); ++idx) {
        rows[idx].n = cfg.n_list[idx];
        rows[idx].est_min = rows[idx].est2_min = rows[idx].err_min =
            std::numeric_limits<double>::infinity();
        rows[idx].est_max = rows[idx].est2_max = rows[idx].err_max = rows[idx].err_native_max =
            -std::numeric_limits<double>::infinity();
    }

    for (int trial = 0; trial < cfg.trials; ++trial) {
        const Matrix<T> a = gen_matrix<T>(cfg.m, cfg.k, cfg.phi,
                                          derive_seed(cfg.seed, static_cast<std::uint64_t>(trial), 0));
        const Matrix<T> b = gen_matrix<T>(cfg.k, cfg.n, cfg.phi,
                                          derive_seed(cfg.seed, static_cast<std::uint64_t>(trial), 1));
        const DyadicMatrix exact_ab = exact_gemm(a, b);
        const Matrix<T> native = native_gemm(a, b);
        const auto [native_err_max, native_err_min] = matrix_extrema(error_matrix(native, exact_ab));
        (void)native_err_min;

        for (std::size_t idx = 0; idx < cfg.n_list.size(); ++idx) {
            const int n = cfg.n_list[idx];
            EmulationResult<T> res = os_ii(a, b, n, /*keep_intermediates=*/true);
            const ModuliTable& table = *res.table;
            const ExponentStats st = exponent_stats(a, b, res.scaling.Cbar);
            const ProdGemm prod = exact_prod_gemm(res.scaling.Aprime, res.scaling.Bprime);
            const BoundResult tight = bound_tight(st, prod.abs_ab, a, b, table);
            const BoundResult cheap = bound_cheap(st, a, b, table);
            const Matrix<double> err = error_matrix(res.C, exact_ab);

            ExperimentRow& row = rows[idx];
            const auto [tmx, tmn] = matrix_extrema(tight.bound);
            const auto [cmx, cmn] = matrix_extrema(cheap.bound);
            const auto [emx, emn] = matrix_extrema(err);
            row.est_max = std::max(row.est_max, tmx);
            row.est_min = std::min(row.est_min, tmn);
            row.est2_max = std::max(row.est2_max, cmx);
            row.est2_min = std::min(row.est2_min, cmn);
            row.err_max = std::max(row.err_max, emx);
            row.err_min = std::min(row.err_min, emn);
            row.err_native_max = std::max(row.err_native_max, native_err_max);
        }
    }
    return rows;
}

} // namespace detail

inline std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    if (cfg.mode == Prec::F32) return detail::run_experiment_typed<float>(cfg);
    return detail::run_experiment_typed<double>(cfg);
}

// CSV: one row per moduli count, fields in ExperimentRow order as hex-floats
// plus a decimal convenience column for err_max.
inline void write_experiment_csv(std::ostream& os, const std::vector<ExperimentRow>& rows) {
    os << "n,est_max,est_min,est2_max,est2_min,err_max,err_min,err_native_max,err_max_dec\n";
    char buf[512];
    for (const ExperimentRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%a,%a,%a,%a,%a,%a,%a,%.17g\n", r.n, r.est_max,
                      r.est_min, r.est2_max, r.est2_min, r.err_max, r.err_min, r.err_native_max,
                      r.err_max);
        os << buf;
    }
}

inline void write_experiment_csv_file(const std::string& path, const std::vector<ExperimentRow>& rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_experiment_csv(os, rows);
}

} // namespace oz2
