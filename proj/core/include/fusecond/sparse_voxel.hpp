#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fusecond/matrix.hpp"

namespace fusecond {

struct VoxelCoord {
    std::uint32_t x = 0;
    std::uint32_t y = 0;
    std::uint32_t z = 0;

    friend auto operator<=>(const VoxelCoord&, const VoxelCoord&) = default;
};

std::uint64_t squared_distance(const VoxelCoord& a, const VoxelCoord& b) noexcept;

// Active voxel positions (strictly lexicographic) with one latent row each.
struct SparseVoxelLatent {
    std::uint32_t grid_size = 0;
    std::vector<VoxelCoord> positions;
    Matrix latents;  // positions.size() x channels

    std::size_t voxel_count() const noexcept { return positions.size(); }
    std::size_t channels() const noexcept { return latents.cols(); }

    void validate() const;

    friend bool operator==(const SparseVoxelLatent&, const SparseVoxelLatent&) = default;
};

// N x N x N occupancy, index (x * N + y) * N + z.
struct DenseBinaryGrid {
    std::uint32_t size = 0;
    std::vector<std::uint8_t> cells;

    DenseBinaryGrid() = default;
    explicit DenseBinaryGrid(std::uint32_t n) : size(n), cells(std::size_t{n} * n * n, 0) {}

    std::uint8_t& at(std::uint32_t x, std::uint32_t y, std::uint32_t z) {
        return cells[(std::size_t{x} * size + y) * size + z];
    }
    std::uint8_t at(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
        return cells[(std::size_t{x} * size + y) * size + z];
    }
};

// Strictly increasing indices into a voxel position list.
struct VoxelSelection {
    std::vector<std::size_t> indices;

    std::size_t size() const noexcept { return indices.size(); }
    bool empty() const noexcept { return indices.empty(); }
    friend bool operator==(const VoxelSelection&, const VoxelSelection&) = default;
};

void validate(const VoxelSelection& sel, std::size_t voxel_count);

std::vector<VoxelCoord> grid_to_positions(const DenseBinaryGrid& grid);

struct KnnVoteParams {
    std::size_t k = 16;
    double fill_fraction = 0.6;   // unselected voxel joins when >= fill_fraction * k neighbours are selected
    double clear_fraction = 0.4;  // selected voxel leaves when < clear_fraction * k neighbours are selected
};

// For every voxel, its k nearest other voxels ordered by (squared distance,
// index). Positions are lexicographically sorted, so index order equals
// lexicographic order. Returns L rows of k indices, flattened.
std::vector<std::size_t> nearest_neighbors(const std::vector<VoxelCoord>& positions, std::size_t k,
                                           std::size_t threads = 1);

// One-pass majority vote against the input selection (no in-pass updates).
VoxelSelection knn_vote_refine(const VoxelSelection& selection, const std::vector<VoxelCoord>& positions,
                               const KnnVoteParams& params = {}, std::size_t threads = 1);

// [0, voxel_count) minus the union of all selections.
VoxelSelection unaligned_complement(const std::vector<VoxelSelection>& selections, std::size_t voxel_count);

// Binary SLat format, little-endian: "SLAT", u32 version = 1, u32 N, u64 L,
// u32 C, L x 3 u32 positions, L x C float32 latents (row-major).
std::string encode_slat(const SparseVoxelLatent& slat);
SparseVoxelLatent decode_slat(const std::string& bytes);
void save_slat(const std::filesystem::path& path, const SparseVoxelLatent& slat);
SparseVoxelLatent load_slat(const std::filesystem::path& path);

}  // namespace fusecond
