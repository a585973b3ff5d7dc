#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fusecond/matrix.hpp"
#include "fusecond/patch_grid.hpp"

namespace fusecond {

// height x width x channels pixel values, row-major with channels innermost.
struct PixelGrid {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    std::vector<double> values;

    PixelGrid() = default;
    PixelGrid(std::size_t h, std::size_t w, std::size_t c, double fill = 0.0)
        : height(h), width(w), channels(c), values(h * w * c, fill) {}

    double& at(std::size_t y, std::size_t x, std::size_t c) { return values[(y * width + x) * channels + c]; }
    double at(std::size_t y, std::size_t x, std::size_t c) const {
        return values[(y * width + x) * channels + c];
    }

    friend bool operator==(const PixelGrid&, const PixelGrid&) = default;
};

struct EncoderConfig {
    std::size_t token_dim = 64;
    std::size_t depth = 2;
    std::size_t head_count = 4;
    std::size_t register_count = 4;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TokenSequence {
    TokenLayout layout;
    Matrix tokens;  // layout.total_count() x token_dim

    std::size_t token_dim() const noexcept { return tokens.cols(); }
};

// Optional capture of every self-attention probability map: [block][head],
// each total_count x total_count.
struct EncoderTrace {
    std::vector<std::vector<Matrix>> attention;
};

// Result of encoding a masked crop. The crop is the mask's bounding box
// expanded outward to patch boundaries, so crop patch (r, c) corresponds to
// full-image patch (r + patch_row_offset, c + patch_col_offset).
struct CroppedEncoding {
    TokenSequence sequence;
    ImageGeometry geometry;
    std::size_t patch_row_offset = 0;
    std::size_t patch_col_offset = 0;
    std::size_t full_patch_cols = 0;

    // Crop-local patch index for a full-image patch index, if inside the crop.
    std::optional<std::size_t> crop_patch_index(std::size_t full_index) const;
};

// Deterministic ViT-style encoder with seeded weights: linear patch embedding
// plus 2D positional encoding, CLS and register rows from seeded constants,
// then `depth` pre-norm blocks of global multi-head self-attention and a GELU
// feed-forward, each with a residual connection.
class ToyEncoder {
public:
    explicit ToyEncoder(EncoderConfig config);

    const EncoderConfig& config() const noexcept { return config_; }

    TokenSequence encode_image(const PixelGrid& pixels, const ImageGeometry& geom,
                               EncoderTrace* trace = nullptr) const;

    // Zeroes pixels outside the mask, crops to the patch-aligned bounding box
    // of the mask, and encodes the crop as a standalone image.
    CroppedEncoding encode_cropped(const PixelGrid& pixels, const RegionMask& mask,
                                   const ImageGeometry& geom) const;

private:
    struct Block {
        Matrix wq, wk, wv, wo;
        Matrix w1, w2;
    };

    Matrix patch_embedding(std::size_t fan_in) const;

    EncoderConfig config_;
    Matrix cls_;
    Matrix registers_;
    std::vector<Block> blocks_;
};

}  // namespace fusecond
