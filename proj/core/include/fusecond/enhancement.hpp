#pragma once

#include <vector>

#include "fusecond/matrix.hpp"
#include "fusecond/sparse_voxel.hpp"

namespace fusecond {

inline constexpr double kDefaultLambdaBeta = 1.0;

struct EnhancementSource {
    VoxelSelection rows;               // V_k, or the unaligned voxels for the global image
    std::vector<std::size_t> columns;  // unified-token rows of that source's selected patches
    double lambda = 1.0;
};

// lambda = 1 + beta * (1 - selected / total): whole-image selections get 1,
// small regions get up to 1 + beta.
double default_lambda(std::size_t selected_count, std::size_t patch_total, double beta = kDefaultLambdaBeta);

// L x T matrix of ones with E[i, j] = lambda for every (row, column) pair of
// every source; overlapping cells keep the largest lambda.
Matrix build_enhancement(const std::vector<EnhancementSource>& sources, std::size_t voxel_count,
                         std::size_t token_count);

// Elementwise product, applied to pre-softmax logits.
Matrix apply_enhancement(const Matrix& logits, const Matrix& enhancement);

// Fraction of entries that differ from exactly 1.
double enhancement_density(const Matrix& enhancement);

}  // namespace fusecond
