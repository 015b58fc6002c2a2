// oz2emu — CLI for CRT-based FP32/FP64 GEMM emulation over a software INT8
// matrix engine: constant-table dumps, emulation runs, deterministic error
// bounds, moduli-count suggestion, the error-vs-bound experiment, and the
// built-in verification suites.

#include <CLI11.hpp>

#include <oz2/bounds.hpp>
#include <oz2/emulate.hpp>
#include <oz2/experiment.hpp>
#include <oz2/gen.hpp>
#include <oz2/matrix_io.hpp>
#include <oz2/moduli.hpp>
#include <oz2/selfcheck.hpp>

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

oz2::Prec parse_mode(const std::string& mode) {
    if (mode == "fp32") return oz2::Prec::F32;
    if (mode == "fp64") return oz2::Prec::F64;
    throw CLI::ValidationError("--mode", "expected fp32 or fp64");
}

std::string hexf(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

void dump_table(std::ostream& os, const oz2::ModuliTable& t) {
    os << "P=" << t.P.get_str() << ",rho=" << t.rho << ",P1=" << hexf(t.P1) << ",P2=" << hexf(t.P2)
       << ",P_inv=" << hexf(t.P_inv) << ",P_prime=" << hexf(static_cast<double>(t.P_prime)) << '\n';
    os << "ell,p,q,beta,s1,s2\n";
    for (int l = 0; l < t.n; ++l) {
        const auto idx = static_cast<std::size_t>(l);
        os << (l + 1) << ',' << t.p[idx] << ',' << t.q[idx] << ',' << t.beta[idx] << ','
           << hexf(t.s1[idx]) << ',' << hexf(t.s2[idx]) << '\n';
    }
}

struct MatrixPair {
    oz2::LoadedMatrix a, b;
};

MatrixPair load_pair(const std::string& a_path, const std::string& b_path, oz2::Prec mode) {
    MatrixPair mp{oz2::read_matrix_file(a_path), oz2::read_matrix_file(b_path)};
    if (mp.a.prec != mode || mp.b.prec != mode)
        throw std::runtime_error("mode mismatch: --mode is " + std::string(oz2::prec_name(mode)) +
                                 " but inputs are " + oz2::prec_name(mp.a.prec) + "/" +
                                 oz2::prec_name(mp.b.prec));
    return mp;
}

int cmd_emulate(const std::string& a_path, const std::string& b_path, int n, oz2::Prec mode,
                const std::string& out_path) {
    MatrixPair mp = load_pair(a_path, b_path, mode);
    if (mode == oz2::Prec::F32) {
        auto res = oz2::os_ii(mp.a.f32, mp.b.f32, n);
        oz2::write_matrix_file(out_path, res.C);
        if (res.subnormal) std::cerr << "note: some outputs passed through the subnormal range\n";
    } else {
        auto res = oz2::os_ii(mp.a.f64, mp.b.f64, n);
        oz2::write_matrix_file(out_path, res.C);
        if (res.subnormal) std::cerr << "note: some outputs passed through the subnormal range\n";
    }
    return 0;
}

template <class T>
int bounds_typed(const oz2::Matrix<T>& a, const oz2::Matrix<T>& b, int n, bool tight) {
    const oz2::ModuliTable& table = oz2::table_for(n, oz2::prec_of<T>);
    oz2::BoundResult br;
    if (tight) {
        auto res = oz2::os_ii(a, b, n, /*keep_intermediates=*/true);
        const oz2::ExponentStats st = oz2::exponent_stats(a, b, res.scaling.Cbar);
        const oz2::AbsGemm absg = oz2::exact_abs_gemm(res.scaling.Aprime, res.scaling.Bprime);
        br = oz2::bound_tight(st, absg.abs_ab, a, b, table);
    } else {
        const auto mu_prime = oz2::row_pre_exponents(a);
        const auto nu_prime = oz2::col_pre_exponents(b);
        const oz2::ClearanceProduct cp = oz2::clearance_product(
            oz2::ceil_abs_scale_rows(a, mu_prime), oz2::ceil_abs_scale_cols(b, nu_prime));
        br = oz2::bound_cheap(oz2::exponent_stats(a, b, cp.Cbar), a, b, table);
    }
    const auto [mx, mn] = oz2::matrix_extrema(br.bound);
    std::printf("bound=%s n=%d max=%a (%.*g) min=%a (%.*g)\n", tight ? "tight" : "cheap", n, mx, 17,
                mx, mn, 17, mn);
    return 0;
}

int cmd_bounds(const std::string& a_path, const std::string& b_path, int n, oz2::Prec mode,
               bool tight) {
    MatrixPair mp = load_pair(a_path, b_path, mode);
    return mode == oz2::Prec::F32 ? bounds_typed(mp.a.f32, mp.b.f32, n, tight)
                                  : bounds_typed(mp.a.f64, mp.b.f64, n, tight);
}

int cmd_suggest(const std::string& a_path, const std::string& b_path, double target,
                oz2::Prec mode) {
    MatrixPair mp = load_pair(a_path, b_path, mode);
    const oz2::SuggestResult res = mode == oz2::Prec::F32
                                       ? oz2::suggest_n(mp.a.f32, mp.b.f32, target)
                                       : oz2::suggest_n(mp.a.f64, mp.b.f64, target);
    if (res.achievable) {
        std::printf("n=%d cheap_bound_max=%a (%.17g)\n", res.n, res.bound_max, res.bound_max);
        return 0;
    }
    const int cap = mode == oz2::Prec::F32 ? oz2::fp32_safe_moduli_max() : oz2::kMaxModuli;
    std::printf("not achievable with N <= %d; best cheap_bound_max=%a (%.17g)\n", cap,
                res.bound_max, res.bound_max);
    return 1;
}

int cmd_experiment(oz2::ExperimentConfig cfg, const std::vector<double>& phis,
                   const std::string& out_path) {
    int violations = 0;
    for (double phi : phis) {
        cfg.phi = phi;
        const std::vector<oz2::ExperimentRow> rows = oz2::run_experiment(cfg);
        std::string path = out_path;
        if (phis.size() > 1) {
            char suffix[32];
            std::snprintf(suffix, sizeof suffix, ".phi%g", phi);
            const auto dot = path.rfind(".csv");
            path = dot == std::string::npos ? path + suffix : path.substr(0, dot) + suffix + ".csv";
        }
        oz2::write_experiment_csv_file(path, rows);
        for (const oz2::ExperimentRow& r : rows) {
            if (!(r.err_max <= r.est_max && r.est_max <= r.est2_max && r.err_min <= r.est_min)) {
                std::fprintf(stderr, "invariant violation at phi=%g n=%d\n", phi, r.n);
                ++violations;
            }
        }
        std::printf("wrote %s (%zu rows)\n", path.c_str(), rows.size());
    }
    return violations == 0 ? 0 : 1;
}

int cmd_selftest(bool deep) {
    using namespace oz2::selfcheck;
    std::vector<Suite> suites;
    const std::uint64_t seed = 0x5eed;

    suites.push_back(check_signed_mod_range(deep ? 1000000 : 20000, 1));
    suites.push_back(check_directed_bracketing(deep ? 500000 : 50000, seed));
    suites.push_back(check_fma_single_rounding(deep ? 500000 : 50000, seed + 1));
    suites.push_back(check_log2f_bound(deep ? (1u << 20) : (1u << 16), deep ? 1000000 : 100000, seed + 2));
    suites.push_back(check_ufp_range(deep ? 500000 : 100000, seed + 3));
    suites.push_back(check_floor_inequality(deep ? (1u << 20) : (1u << 16), deep ? 1000000 : 100000, seed + 4));
    for (int n : {2, 10, 25, 49})
        suites.push_back(check_crt_reconstruction(oz2::table_for(n, oz2::Prec::F64), deep ? 1000 : 200, seed + 5));
    suites.push_back(check_int8_wrap(deep ? 1000 : 200, seed + 6));

    long long pipeline_checked = 0, pipeline_viol = 0;
    for (oz2::Prec mode : {oz2::Prec::F32, oz2::Prec::F64})
        for (double phi : {0.0, 2.0})
            for (int n : {2, 8, 16, 30, 49}) {
                if (mode == oz2::Prec::F32 && n > oz2::fp32_safe_moduli_max()) continue;
                InstanceChecks ic;
                if (mode == oz2::Prec::F32) {
                    const auto a = oz2::gen_matrix<float>(8, 32, phi, seed + static_cast<unsigned>(n));
                    const auto b = oz2::gen_matrix<float>(32, 8, phi, seed + 100 + static_cast<unsigned>(n));
                    ic = check_instance(a, b, n);
                } else {
                    const auto a = oz2::gen_matrix<double>(8, 32, phi, seed + static_cast<unsigned>(n));
                    const auto b = oz2::gen_matrix<double>(32, 8, phi, seed + 100 + static_cast<unsigned>(n));
                    ic = check_instance(a, b, n);
                }
                pipeline_checked += ic.checked;
                pipeline_viol += ic.total_violations();
            }
    suites.push_back(Suite{"pipeline properties on random instances", pipeline_checked, pipeline_viol, ""});

    bool all_pass = true;
    for (const Suite& s : suites) {
        std::printf("[%s] %-48s checked=%lld violations=%lld\n", s.pass() ? "PASS" : "FAIL",
                    s.name.c_str(), s.checked, s.violations);
        all_pass = all_pass && s.pass();
    }
    std::printf("%s\n", all_pass ? "selftest: all suites passed" : "selftest: FAILURES detected");
    return all_pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CRT-based FP32/FP64 GEMM emulation on a software INT8 engine"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker thread count (default: hardware)");

    std::string mode_str = "fp64";
    std::string a_path, b_path, out_path;
    int n_moduli = 20;
    bool tight = false;
    double target = 0;
    bool deep = false;

    auto* t_cmd = app.add_subcommand("table", "dump the per-N constant table as CSV");
    t_cmd->add_option("--n", n_moduli, "moduli count (2..49)")->required();
    t_cmd->add_option("--mode", mode_str, "fp32|fp64")->required();
    t_cmd->add_option("--out", out_path, "output file (default: stdout)");

    auto* e_cmd = app.add_subcommand("emulate", "emulate C = A*B");
    e_cmd->add_option("--a", a_path)->required();
    e_cmd->add_option("--b", b_path)->required();
    e_cmd->add_option("--n", n_moduli)->required();
    e_cmd->add_option("--mode", mode_str)->required();
    e_cmd->add_option("--out", out_path)->required();

    auto* b_cmd = app.add_subcommand("bounds", "evaluate the deterministic error bound");
    b_cmd->add_option("--a", a_path)->required();
    b_cmd->add_option("--b", b_path)->required();
    b_cmd->add_option("--n", n_moduli)->required();
    b_cmd->add_option("--mode", mode_str)->required();
    b_cmd->add_flag("--tight", tight, "tight bound (uses the exact |A'B'| oracle)");

    auto* s_cmd = app.add_subcommand("suggest-n", "smallest N meeting a target bound");
    s_cmd->add_option("--a", a_path)->required();
    s_cmd->add_option("--b", b_path)->required();
    s_cmd->add_option("--target", target, "target max absolute error bound")->required();
    s_cmd->add_option("--mode", mode_str)->required();

    oz2::ExperimentConfig cfg;
    std::vector<double> phis{0.5, 2.0, 8.0};
    std::vector<int> n_list;
    std::uint64_t seed = 1;
    auto* x_cmd = app.add_subcommand("experiment", "error-vs-bound sweep, CSV output");
    x_cmd->add_option("--m", cfg.m);
    x_cmd->add_option("--n", cfg.n);
    x_cmd->add_option("--k", cfg.k);
    x_cmd->add_option("--phi", phis, "dynamic-range parameter(s)");
    x_cmd->add_option("--mode", mode_str)->required();
    x_cmd->add_option("--n-list", n_list, "moduli counts (default: 2..49 within mode limits)");
    x_cmd->add_option("--seed", seed);
    x_cmd->add_option("--trials", cfg.trials);
    x_cmd->add_option("--out", out_path, "output CSV path")->required();

    auto* st_cmd = app.add_subcommand("selftest", "run the verification suites");
    st_cmd->add_flag("--deep", deep, "full-budget sweeps");

    CLI11_PARSE(app, argc, argv);

    if (threads > 0) oz2::worker_threads() = threads;

    try {
        if (t_cmd->parsed()) {
            const oz2::ModuliTable& t = oz2::table_for(n_moduli, parse_mode(mode_str));
            if (out_path.empty()) {
                dump_table(std::cout, t);
            } else {
                std::ofstream os(out_path);
                if (!os) throw std::runtime_error("cannot open " + out_path);
                dump_table(os, t);
            }
            return 0;
        }
        if (e_cmd->parsed()) return cmd_emulate(a_path, b_path, n_moduli, parse_mode(mode_str), out_path);
        if (b_cmd->parsed()) return cmd_bounds(a_path, b_path, n_moduli, parse_mode(mode_str), tight);
        if (s_cmd->parsed()) return cmd_suggest(a_path, b_path, target, parse_mode(mode_str));
        if (x_cmd->parsed()) {
            cfg.mode = parse_mode(mode_str);
            cfg.seed = seed;
            if (n_list.empty()) {
                const int cap = cfg.mode == oz2::Prec::F32 ? oz2::fp32_safe_moduli_max() : oz2::kMaxModuli;
                for (int n = 2; n <= cap; ++n) n_list.push_back(n);
            }
            cfg.n_list = n_list;
            return cmd_experiment(cfg, phis, out_path);
        }
        if (st_cmd->parsed()) return cmd_selftest(deep);
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 2;
    }
    return 0;
}
