// matrix.hpp — dense row-major matrix container used throughout the library.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace oz2 {

template <class T>
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(std::int64_t rows, std::int64_t cols, T init = T{})
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), init) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative dimension");
    }

    std::int64_t rows() const { return rows_; }
    std::int64_t cols() const { return cols_; }
    std::int64_t size() const { return rows_ * cols_; }
    bool empty() const { return data_.empty(); }

    T& operator()(std::int64_t i, std::int64_t j) { return data_[static_cast<std::size_t>(i * cols_ + j)]; }
    const T& operator()(std::int64_t i, std::int64_t j) const { return data_[static_cast<std::size_t>(i * cols_ + j)]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    bool same_shape(const Matrix& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::int64_t rows_, cols_;
    std::vector<T> data_;
};

using MatrixF32 = Matrix<float>;
using MatrixF64 = Matrix<double>;
using MatrixI8  = Matrix<std::int8_t>;
using MatrixI32 = Matrix<std::int32_t>;

inline void require_dims(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("dimension mismatch: " + what);
}

} // namespace oz2
