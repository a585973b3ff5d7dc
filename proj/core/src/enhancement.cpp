#include "fusecond/enhancement.hpp"

#include <algorithm>
#include <cmath>

#include "fusecond/error.hpp"

namespace fusecond {

double default_lambda(std::size_t selected_count, std::size_t patch_total, double beta) {
    require(patch_total >= 1, ErrorCategory::parameter, "lambda: patch total must be >= 1");
    require(selected_count <= patch_total, ErrorCategory::parameter, "lambda: selected count exceeds total");
    require(beta >= 0.0 && std::isfinite(beta), ErrorCategory::parameter, "lambda: beta must be finite and >= 0");
    const double fraction = static_cast<double>(selected_count) / static_cast<double>(patch_total);
    return 1.0 + beta * (1.0 - fraction);
}

Matrix build_enhancement(const std::vector<EnhancementSource>& sources, std::size_t voxel_count,
                         std::size_t token_count) {
    Matrix e(voxel_count, token_count, 1.0);
    // Cells start untouched; the first source to cover a cell sets it, later
    // ones only raise it.
    std::vector<std::uint8_t> touched(voxel_count * token_count, 0);
    for (const auto& s : sources) {
        require(s.lambda > 0.0 && std::isfinite(s.lambda), ErrorCategory::parameter,
                "enhancement: lambda must be positive and finite");
        validate(s.rows, voxel_count);
        for (auto j : s.columns) {
            require(j < token_count, ErrorCategory::parameter, "enhancement: token column out of range");
        }
        for (auto i : s.rows.indices) {
            for (auto j : s.columns) {
                const std::size_t cell = i * token_count + j;
                double& v = e.data()[cell];
                v = touched[cell] ? std::max(v, s.lambda) : s.lambda;
                touched[cell] = 1;
            }
        }
    }
    return e;
}

Matrix apply_enhancement(const Matrix& logits, const Matrix& enhancement) {
    require(logits.rows() == enhancement.rows() && logits.cols() == enhancement.cols(), ErrorCategory::parameter,
            "enhancement: shape mismatch");
    Matrix out = logits;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= enhancement.data()[i];
    return out;
}

double enhancement_density(const Matrix& enhancement) {
    if (enhancement.empty()) return 0.0;
    const auto n = std::count_if(enhancement.data().begin(), enhancement.data().end(), [](double v) { return v != 1.0; });
    return static_cast<double>(n) / static_cast<double>(enhancement.size());
}

}  // namespace fusecond
