#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fusecond {

inline constexpr std::size_t kDefaultPatchSize = 14;
inline constexpr double kDefaultCoverageThreshold = 0.5;

// Pixel dimensions of a condition image and its square patch size. Both image
// sides must be exact multiples of the patch size.
class ImageGeometry {
public:
    ImageGeometry(std::size_t height_px, std::size_t width_px,
                  std::size_t patch_size_px = kDefaultPatchSize);

    std::size_t height_px() const noexcept { return height_; }
    std::size_t width_px() const noexcept { return width_; }
    std::size_t patch_size_px() const noexcept { return patch_; }
    std::size_t patch_rows() const noexcept { return height_ / patch_; }
    std::size_t patch_cols() const noexcept { return width_ / patch_; }
    std::size_t patch_count() const noexcept { return patch_rows() * patch_cols(); }

    friend bool operator==(const ImageGeometry&, const ImageGeometry&) = default;

private:
    std::size_t height_;
    std::size_t width_;
    std::size_t patch_;
};

// Row-major binary grid. Used both for pixel-level region masks and for the
// patch-level masks obtained by downsampling.
struct BinaryGrid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> cells;

    BinaryGrid() = default;
    BinaryGrid(std::size_t r, std::size_t c, std::uint8_t fill = 0)
        : rows(r), cols(c), cells(r * c, fill) {}

    std::uint8_t at(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
    void set(std::size_t r, std::size_t c, bool on) { cells[r * cols + c] = on ? 1 : 0; }
    std::size_t count() const;

    friend bool operator==(const BinaryGrid&, const BinaryGrid&) = default;
};

struct RegionMask : BinaryGrid {
    using BinaryGrid::BinaryGrid;
};

struct PatchMask : BinaryGrid {
    using BinaryGrid::BinaryGrid;
};

// Strictly increasing patch indices i = row * cols + col.
struct TokenIndexSet {
    std::vector<std::size_t> indices;

    std::size_t size() const noexcept { return indices.size(); }
    bool empty() const noexcept { return indices.empty(); }
    friend bool operator==(const TokenIndexSet&, const TokenIndexSet&) = default;
};

// Encoder sequence layout: CLS at 0, registers at [1, 1 + r), patches after.
struct TokenLayout {
    std::size_t register_count = 0;
    std::size_t patch_count = 0;

    std::size_t total_count() const noexcept { return 1 + register_count + patch_count; }
    std::size_t cls_position() const noexcept { return 0; }
    std::size_t first_register() const noexcept { return 1; }
    std::size_t first_patch() const noexcept { return 1 + register_count; }
    std::size_t patch_position(std::size_t patch_index) const noexcept {
        return first_patch() + patch_index;
    }
    bool is_patch_position(std::size_t position) const noexcept {
        return position >= first_patch() && position < total_count();
    }

    friend bool operator==(const TokenLayout&, const TokenLayout&) = default;
};

// A patch is set when its block holds at least one set pixel and the fraction
// of set pixels is >= threshold, so threshold 0 means "any pixel".
PatchMask downsample_mask(const RegionMask& mask, const ImageGeometry& geom,
                          double coverage_threshold = kDefaultCoverageThreshold);

TokenIndexSet patch_indices(const PatchMask& pmask);

// Inverse of patch_indices for a given patch grid shape.
PatchMask indicator_mask(const TokenIndexSet& set, std::size_t rows, std::size_t cols);

TokenLayout token_layout(const ImageGeometry& geom, std::size_t register_count);

void validate(const TokenIndexSet& set, std::size_t patch_count);

// ASCII mask format: "MASK <rows> <cols>" then <rows> lines of <cols>
// space-separated 0/1 digits.
RegionMask parse_mask(const std::string& text);
std::string format_mask(const BinaryGrid& mask);
RegionMask load_mask(const std::filesystem::path& path);
void save_mask(const std::filesystem::path& path, const BinaryGrid& mask);

}  // namespace fusecond
