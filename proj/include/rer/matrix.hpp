#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace rer {

// Dense row-major matrix of doubles. All numeric state in the library is
// 64-bit; narrower inputs are widened at the I/O boundary.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    std::span<double> row_span(std::size_t i) { return {row(i), cols_}; }
    std::span<const double> row_span(std::size_t i) const { return {row(i), cols_}; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::size_t size() const { return data_.size(); }

    // keeps capacity; contents unspecified after resize
    void resize(std::size_t rows, std::size_t cols) {
        rows_ = rows;
        cols_ = cols;
        data_.resize(rows * cols);
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// C = A(m x k) * B(k x n), optionally accumulating into C.
void gemm_nn(const double* a, std::size_t m, std::size_t k,
             const double* b, std::size_t n, double* c, bool accumulate = false);

// C = A(m x k) * B^T where B is stored row-major n x k.
void gemm_nt(const double* a, std::size_t m, std::size_t k,
             const double* b, std::size_t n, double* c, bool accumulate = false);

// C(k x n) += A^T(k x m) * B(m x n) with A stored row-major m x k.
// Always accumulates; used for weight-gradient outer products.
void gemm_tn_acc(const double* a, std::size_t m, std::size_t k,
                 const double* b, std::size_t n, double* c);

double squared_distance(const double* x, const double* y, std::size_t n);
double euclidean_distance(const double* x, const double* y, std::size_t n);

} // namespace rer
