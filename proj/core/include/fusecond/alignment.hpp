#pragma once

#include <vector>

#include "fusecond/flow_model.hpp"
#include "fusecond/patch_grid.hpp"
#include "fusecond/sparse_voxel.hpp"

namespace fusecond {

inline constexpr double kDefaultScoreThreshold = 0.55;
inline constexpr std::size_t kDefaultHeadSubsetSize = 3;

struct AlignmentConfig {
    double score_threshold = kDefaultScoreThreshold;
    double reverse_threshold = kDefaultScoreThreshold;
    std::vector<std::size_t> heads;          // explicit head list; empty selects automatically
    std::size_t auto_head_count = kDefaultHeadSubsetSize;
    std::size_t block_index = 0;
    bool average_blocks = false;              // average head-summed logits over every block
    bool refine = true;
    KnnVoteParams refine_params;

    void validate() const;
};

// Mean row entropy (nats) of the token-axis softmax of one head's logits.
double mean_row_entropy(const Matrix& logits);

// Heads of `block` ranked by ascending mean row entropy (sharpest first), ties
// by head index; the first n are returned.
std::vector<std::size_t> select_heads(const CrossAttentionRecord& record, std::size_t block, std::size_t n);

// Heads the configuration resolves to for this record.
std::vector<std::size_t> resolve_heads(const CrossAttentionRecord& record, const AlignmentConfig& config);

// Sum of the chosen heads' logits in the configured block (or the mean over
// blocks of the per-block head sums when average_blocks is set). L x T.
Matrix summed_logits(const CrossAttentionRecord& record, const std::vector<std::size_t>& heads,
                     const AlignmentConfig& config);

struct ForwardAlignment {
    std::vector<std::size_t> heads;
    std::vector<double> scores;  // per voxel, in [0, 1]
    VoxelSelection raw;          // scores >= threshold
    VoxelSelection refined;      // after the kNN vote (== raw when refinement is off)
};

// Token-axis softmax per voxel row, score = mass on `columns`, threshold,
// then kNN majority-vote refinement over `positions`.
ForwardAlignment forward_align(const CrossAttentionRecord& record, const std::vector<std::size_t>& columns,
                               const AlignmentConfig& config, const std::vector<VoxelCoord>& positions,
                               std::size_t threads = 1);

struct ReverseAlignment {
    std::vector<std::size_t> heads;
    std::vector<double> scores;  // per token column, in [0, 1]
    TokenIndexSet selected;      // patch indices of kept PATCH columns
};

// Voxel-axis softmax per token column, score = mass on `unaligned` rows,
// threshold; only PATCH columns of `layout` may be selected.
ReverseAlignment reverse_align(const CrossAttentionRecord& record, const VoxelSelection& unaligned,
                               const TokenLayout& layout, const AlignmentConfig& config);

}  // namespace fusecond
