#include "fusecond/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fusecond/error.hpp"

namespace fusecond {

void AlignmentConfig::validate() const {
    require(score_threshold >= 0.0 && score_threshold <= 1.0, ErrorCategory::config,
            "alignment: score_threshold must lie in [0, 1]");
    require(reverse_threshold >= 0.0 && reverse_threshold <= 1.0, ErrorCategory::config,
            "alignment: reverse_threshold must lie in [0, 1]");
    require(!heads.empty() || auto_head_count >= 1, ErrorCategory::config,
            "alignment: automatic head count must be >= 1");
}

double mean_row_entropy(const Matrix& logits) {
    double total = 0.0;
    std::vector<double> row(logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto src = logits.row(i);
        std::copy(src.begin(), src.end(), row.begin());
        softmax_inplace(row);
        double h = 0.0;
        for (double p : row) {
            if (p > 0.0) h -= p * std::log(p);
        }
        total += h;
    }
    return logits.rows() == 0 ? 0.0 : total / static_cast<double>(logits.rows());
}

std::vector<std::size_t> select_heads(const CrossAttentionRecord& record, std::size_t block, std::size_t n) {
    require(block < record.block_count(), ErrorCategory::parameter, "alignment: block index out of range");
    const auto& heads = record.logits[block];
    require(n >= 1 && n <= heads.size(), ErrorCategory::parameter,
            "alignment: head subset size must lie in [1, " + std::to_string(heads.size()) + "]");
    std::vector<double> entropy(heads.size());
    for (std::size_t h = 0; h < heads.size(); ++h) entropy[h] = mean_row_entropy(heads[h]);
    std::vector<std::size_t> order(heads.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return entropy[a] < entropy[b]; });
    order.resize(n);
    return order;
}

std::vector<std::size_t> resolve_heads(const CrossAttentionRecord& record, const AlignmentConfig& config) {
    config.validate();
    if (config.heads.empty()) return select_heads(record, config.block_index, config.auto_head_count);
    for (auto h : config.heads) {
        require(h < record.head_count(), ErrorCategory::parameter, "alignment: head index out of range");
    }
    return config.heads;
}

Matrix summed_logits(const CrossAttentionRecord& record, const std::vector<std::size_t>& heads,
                     const AlignmentConfig& config) {
    require(config.block_index < record.block_count(), ErrorCategory::parameter,
            "alignment: block index out of range");
    Matrix out(record.voxel_count(), record.token_count());
    auto accumulate_block = [&](std::size_t b) {
        for (auto h : heads) {
            const auto& src = record.logits[b][h].data();
            for (std::size_t i = 0; i < src.size(); ++i) out.data()[i] += src[i];
        }
    };
    if (!config.average_blocks) {
        accumulate_block(config.block_index);
        return out;
    }
    for (std::size_t b = 0; b < record.block_count(); ++b) accumulate_block(b);
    for (double& v : out.data()) v /= static_cast<double>(record.block_count());
    return out;
}

ForwardAlignment forward_align(const CrossAttentionRecord& record, const std::vector<std::size_t>& columns,
                               const AlignmentConfig& config, const std::vector<VoxelCoord>& positions,
                               std::size_t threads) {
    const std::size_t tokens = record.token_count();
    require(record.voxel_count() == positions.size(), ErrorCategory::parameter,
            "alignment: record rows do not match the voxel count");
    for (auto j : columns) require(j < tokens, ErrorCategory::parameter, "alignment: token column out of range");

    ForwardAlignment out;
    out.heads = resolve_heads(record, config);
    Matrix logits = summed_logits(record, out.heads, config);
    out.scores.resize(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        auto row = logits.row(i);
        softmax_inplace(row);
        double score = 0.0;
        for (auto j : columns) score += row[j];
        out.scores[i] = score;
        if (score >= config.score_threshold) out.raw.indices.push_back(i);
    }
    out.refined = config.refine ? knn_vote_refine(out.raw, positions, config.refine_params, threads) : out.raw;
    return out;
}

ReverseAlignment reverse_align(const CrossAttentionRecord& record, const VoxelSelection& unaligned,
                               const TokenLayout& layout, const AlignmentConfig& config) {
    const std::size_t voxels = record.voxel_count();
    const std::size_t tokens = record.token_count();
    require(tokens == layout.total_count(), ErrorCategory::parameter,
            "alignment: record columns do not match the token layout");
    validate(unaligned, voxels);

    ReverseAlignment out;
    out.heads = resolve_heads(record, config);
    const Matrix logits = summed_logits(record, out.heads, config);
    out.scores.assign(tokens, 0.0);
    std::vector<double> column(voxels);
    for (std::size_t j = 0; j < tokens; ++j) {
        for (std::size_t i = 0; i < voxels; ++i) column[i] = logits(i, j);
        softmax_inplace(column);
        double score = 0.0;
        for (auto i : unaligned.indices) score += column[i];
        out.scores[j] = score;
        if (layout.is_patch_position(j) && score >= config.reverse_threshold) {
            out.selected.indices.push_back(j - layout.first_patch());
        }
    }
    return out;
}

}  // namespace fusecond
