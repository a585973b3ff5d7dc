#pragma once

#include <vector>

#include "fusecond/matrix.hpp"

namespace fusecond {

struct AttentionCapture {
    std::vector<Matrix> logits;         // per head, pre-softmax and before any scaling
    std::vector<Matrix> probabilities;  // per head, post-softmax (only if requested)
};

struct AttentionOptions {
    const Matrix* logit_scale = nullptr;  // optional elementwise multiplier (queries x keys)
    bool capture_logits = false;
    bool capture_probabilities = false;
    std::size_t threads = 1;
};

// Multi-head scaled dot-product attention. queries is (n x d), keys and values
// are (m x d); d is split into head_count contiguous slices of width d / h.
// Logits are q . k / sqrt(d / h); when a scale matrix is given, logits are
// multiplied by it elementwise before the softmax over the key axis.
Matrix multi_head_attention(const Matrix& queries, const Matrix& keys, const Matrix& values,
                            std::size_t head_count, const AttentionOptions& options = {},
                            AttentionCapture* capture = nullptr);

}  // namespace fusecond
