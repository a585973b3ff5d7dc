#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fusecond {

// Dense row-major matrix of doubles. All numeric kernels in the library run
// in double precision; float32 only appears at file boundaries.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    bool all_finite() const noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// out = a * b; a is (n x k), b is (k x m).
Matrix matmul(const Matrix& a, const Matrix& b);

// Row-wise layer normalization without learned affine parameters.
Matrix layer_norm(const Matrix& x, double eps = 1e-6);

// In-place numerically stable softmax of a single vector.
void softmax_inplace(std::span<double> values);

double gelu(double x) noexcept;

double frobenius_norm(const Matrix& m);

}  // namespace fusecond
