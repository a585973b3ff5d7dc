#pragma once

#include <cstdint>
#include <vector>

#include "fusecond/alignment.hpp"
#include "fusecond/flow_model.hpp"
#include "fusecond/matrix.hpp"
#include "fusecond/patch_grid.hpp"
#include "fusecond/random.hpp"
#include "fusecond/sparse_voxel.hpp"

// Straightforward reference implementations. They share no code with the
// library kernels beyond the data types, and favour explicit loops over speed.
namespace fusecond::oracle {

std::vector<std::size_t> enumerate_patches(const PatchMask& mask);

PatchMask downsample_by_counting(const RegionMask& mask, std::size_t patch, double threshold);

Matrix multiply(const Matrix& a, const Matrix& b);

Matrix normalize_rows(const Matrix& x, double eps = 1e-6);

std::vector<double> softmax(const std::vector<double>& logits);

struct AttentionResult {
    Matrix output;
    std::vector<Matrix> logits;         // per head, unscaled
    std::vector<Matrix> probabilities;  // per head
};

AttentionResult attention(const Matrix& q, const Matrix& k, const Matrix& v, std::size_t heads,
                          const Matrix* scale = nullptr);

struct VelocityTrace {
    Matrix velocity;
    std::vector<std::vector<Matrix>> logits;
};

// Velocity of the flow transformer recomputed from its weights.
VelocityTrace velocity(const FlowModel& model, const SparseVoxelLatent& state, double t, const Matrix& tokens,
                       const Matrix* enhancement = nullptr);

// Euler integration from t = 1 to 0 with the reference velocity.
Matrix sample(const FlowModel& model, const std::vector<VoxelCoord>& positions, const Matrix& tokens,
              const SamplerConfig& sampler, const Matrix* enhancement = nullptr);

// Heads ordered by ascending mean entropy of their row softmax, ties by index.
std::vector<std::size_t> rank_heads(const std::vector<Matrix>& head_logits);

Matrix head_sum(const CrossAttentionRecord& record, std::size_t block, const std::vector<std::size_t>& heads);

std::vector<double> forward_scores(const Matrix& summed, const std::vector<std::size_t>& columns);
std::vector<double> reverse_scores(const Matrix& summed, const std::vector<std::size_t>& rows);

// k nearest other voxels of every voxel by a full sort over (squared distance, index).
std::vector<std::vector<std::size_t>> neighbours(const std::vector<VoxelCoord>& positions, std::size_t k);

// One vote pass evaluated in `order` against a frozen copy of the selection.
std::vector<std::size_t> vote(const std::vector<std::size_t>& selection, const std::vector<VoxelCoord>& positions,
                              const KnnVoteParams& params, const std::vector<std::size_t>& order);

std::vector<std::size_t> complement(const std::vector<std::vector<std::size_t>>& selections, std::size_t count);

// Random generators for property checks.
std::vector<VoxelCoord> random_voxels(SplitMix64& rng, std::size_t count, std::uint32_t grid);
std::vector<std::size_t> random_subset(SplitMix64& rng, std::size_t universe, double density);
std::vector<std::size_t> random_permutation(SplitMix64& rng, std::size_t n);
Matrix random_matrix(SplitMix64& rng, std::size_t rows, std::size_t cols, double scale = 1.0);
std::size_t random_between(SplitMix64& rng, std::size_t lo, std::size_t hi);  // inclusive

}  // namespace fusecond::oracle
