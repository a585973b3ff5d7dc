#include "fusecond/attention.hpp"

#include <cmath>

#include "fusecond/error.hpp"
#include "fusecond/parallel.hpp"

namespace fusecond {

Matrix multi_head_attention(const Matrix& queries, const Matrix& keys, const Matrix& values,
                            std::size_t head_count, const AttentionOptions& options,
                            AttentionCapture* capture) {
    const std::size_t n = queries.rows();
    const std::size_t m = keys.rows();
    const std::size_t d = queries.cols();
    require(head_count > 0 && d % head_count == 0, ErrorCategory::model,
            "attention: width must be divisible by head count");
    require(keys.cols() == d && values.cols() == d && values.rows() == m, ErrorCategory::model,
            "attention: query/key/value shapes disagree");
    require(m > 0, ErrorCategory::model, "attention: no keys");
    if (options.logit_scale != nullptr) {
        require(options.logit_scale->rows() == n && options.logit_scale->cols() == m,
                ErrorCategory::model, "attention: scale matrix shape mismatch");
    }

    const std::size_t dh = d / head_count;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    const bool want_logits = capture != nullptr && options.capture_logits;
    const bool want_probs = capture != nullptr && options.capture_probabilities;
    if (want_logits) capture->logits.assign(head_count, Matrix(n, m));
    if (want_probs) capture->probabilities.assign(head_count, Matrix(n, m));

    Matrix out(n, d);
    parallel_for(n, options.threads, [&](std::size_t i) {
        std::vector<double> row(m);
        const auto q = queries.row(i);
        auto o = out.row(i);
        for (std::size_t h = 0; h < head_count; ++h) {
            const std::size_t off = h * dh;
            for (std::size_t j = 0; j < m; ++j) {
                const auto k = keys.row(j);
                double dot = 0.0;
                for (std::size_t c = 0; c < dh; ++c) dot += q[off + c] * k[off + c];
                row[j] = dot * inv_sqrt;
            }
            if (want_logits) {
                auto dst = capture->logits[h].row(i);
                std::copy(row.begin(), row.end(), dst.begin());
            }
            if (options.logit_scale != nullptr) {
                const auto s = options.logit_scale->row(i);
                for (std::size_t j = 0; j < m; ++j) row[j] *= s[j];
            }
            softmax_inplace(row);
            if (want_probs) {
                auto dst = capture->probabilities[h].row(i);
                std::copy(row.begin(), row.end(), dst.begin());
            }
            for (std::size_t j = 0; j < m; ++j) {
                const double w = row[j];
                const auto v = values.row(j);
                for (std::size_t c = 0; c < dh; ++c) o[off + c] += w * v[off + c];
            }
        }
    });
    return out;
}

}  // namespace fusecond
