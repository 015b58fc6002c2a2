// matrix_io.hpp — text matrix format for the CLI:
//   header line "rows cols {fp32|fp64}", then one hex-float per line,
//   row-major. Hex-float round-trips are bit-exact and endianness-free.
#pragma once

#include "matrix.hpp"
#include "moduli.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace oz2 {

namespace detail {

inline std::string hexfloat(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

} // namespace detail

template <class T>
void write_matrix(std::ostream& os, const Matrix<T>& m) {
    os << m.rows() << ' ' << m.cols() << ' ' << prec_name(prec_of<T>) << '\n';
    for (std::int64_t i = 0; i < m.rows(); ++i)
        for (std::int64_t j = 0; j < m.cols(); ++j)
            os << detail::hexfloat(static_cast<double>(m(i, j))) << '\n';
}

template <class T>
void write_matrix_file(const std::string& path, const Matrix<T>& m) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_matrix(os, m);
}

struct LoadedMatrix {
    Prec prec = Prec::F64;
    MatrixF32 f32;
    MatrixF64 f64;
};

inline LoadedMatrix read_matrix(std::istream& is, const std::string& what) {
    std::int64_t rows, cols;
    std::string mode;
    if (!(is >> rows >> cols >> mode)) throw std::runtime_error("bad matrix header in " + what);
    LoadedMatrix out;
    if (mode == "fp32") out.prec = Prec::F32;
    else if (mode == "fp64") out.prec = Prec::F64;
    else throw std::runtime_error("bad precision '" + mode + "' in " + what);

    std::string tok;
    auto next_value = [&]() -> double {
        if (!(is >> tok)) throw std::runtime_error("truncated matrix data in " + what);
        return std::strtod(tok.c_str(), nullptr);
    };
    if (out.prec == Prec::F32) {
        out.f32 = MatrixF32(rows, cols);
        for (std::int64_t i = 0; i < rows; ++i)
            for (std::int64_t j = 0; j < cols; ++j)
                out.f32(i, j) = static_cast<float>(next_value());
    } else {
        out.f64 = MatrixF64(rows, cols);
        for (std::int64_t i = 0; i < rows; ++i)
            for (std::int64_t j = 0; j < cols; ++j)
                out.f64(i, j) = next_value();
    }
    return out;
}

inline LoadedMatrix read_matrix_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return read_matrix(is, path);
}

} // namespace oz2
