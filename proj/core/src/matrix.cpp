#include "fusecond/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fusecond/error.hpp"

namespace fusecond {

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.rows(), ErrorCategory::model, "matmul: inner dimensions differ");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto out_row = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            const auto b_row = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out_row[j] += aik * b_row[j];
            }
        }
    }
    return out;
}

Matrix layer_norm(const Matrix& x, double eps) {
    Matrix out(x.rows(), x.cols());
    const auto n = static_cast<double>(x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto in = x.row(i);
        double mean = 0.0;
        for (double v : in) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : in) var += (v - mean) * (v - mean);
        var /= n;
        const double inv = 1.0 / std::sqrt(var + eps);
        auto o = out.row(i);
        for (std::size_t j = 0; j < in.size(); ++j) {
            o[j] = (in[j] - mean) * inv;
        }
    }
    return out;
}

void softmax_inplace(std::span<double> values) {
    if (values.empty()) return;
    const double peak = *std::max_element(values.begin(), values.end());
    double total = 0.0;
    for (double& v : values) {
        v = std::exp(v - peak);
        total += v;
    }
    for (double& v : values) v /= total;
}

double gelu(double x) noexcept {
    constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
    return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
}

double frobenius_norm(const Matrix& m) {
    double acc = 0.0;
    for (double v : m.data()) acc += v * v;
    return std::sqrt(acc);
}

}  // namespace fusecond
