#include "fusecond/toy_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fusecond/attention.hpp"
#include "fusecond/embedding.hpp"
#include "fusecond/error.hpp"
#include "fusecond/random.hpp"

namespace fusecond {

void EncoderConfig::validate() const {
    require(token_dim > 0, ErrorCategory::config, "encoder: token_dim must be positive");
    require(head_count > 0, ErrorCategory::config, "encoder: head_count must be positive");
    require(token_dim % head_count == 0, ErrorCategory::config,
            "encoder: token_dim must be divisible by head_count");
}

std::optional<std::size_t> CroppedEncoding::crop_patch_index(std::size_t full_index) const {
    const std::size_t row = full_index / full_patch_cols;
    const std::size_t col = full_index % full_patch_cols;
    if (row < patch_row_offset || col < patch_col_offset) return std::nullopt;
    const std::size_t r = row - patch_row_offset;
    const std::size_t c = col - patch_col_offset;
    if (r >= geometry.patch_rows() || c >= geometry.patch_cols()) return std::nullopt;
    return r * geometry.patch_cols() + c;
}

ToyEncoder::ToyEncoder(EncoderConfig config) : config_(config) {
    config_.validate();
    const std::size_t d = config_.token_dim;
    const std::size_t hidden = 2 * d;
    const auto seed = config_.seed;
    cls_ = xavier_matrix(1, d, derive_seed(seed, "encoder/cls"));
    registers_ = xavier_matrix(std::max<std::size_t>(config_.register_count, 1), d,
                               derive_seed(seed, "encoder/registers"));
    blocks_.reserve(config_.depth);
    for (std::size_t b = 0; b < config_.depth; ++b) {
        const std::string p = "encoder/block" + std::to_string(b) + "/";
        blocks_.push_back(Block{
            xavier_matrix(d, d, derive_seed(seed, p + "wq")),
            xavier_matrix(d, d, derive_seed(seed, p + "wk")),
            xavier_matrix(d, d, derive_seed(seed, p + "wv")),
            xavier_matrix(d, d, derive_seed(seed, p + "wo")),
            xavier_matrix(d, hidden, derive_seed(seed, p + "w1")),
            xavier_matrix(hidden, d, derive_seed(seed, p + "w2")),
        });
    }
}

Matrix ToyEncoder::patch_embedding(std::size_t fan_in) const {
    return xavier_matrix(fan_in, config_.token_dim,
                         derive_seed(config_.seed, "encoder/patch_embed/" + std::to_string(fan_in)));
}

TokenSequence ToyEncoder::encode_image(const PixelGrid& pixels, const ImageGeometry& geom,
                                       EncoderTrace* trace) const {
    require(pixels.height == geom.height_px() && pixels.width == geom.width_px(), ErrorCategory::geometry,
            "encoder: pixel grid does not match image geometry");
    require(pixels.channels >= 1, ErrorCategory::geometry, "encoder: pixel grid has no channels");
    require(pixels.values.size() == pixels.height * pixels.width * pixels.channels, ErrorCategory::geometry,
            "encoder: pixel buffer size mismatch");
    require(std::all_of(pixels.values.begin(), pixels.values.end(), [](double v) { return std::isfinite(v); }),
            ErrorCategory::numeric, "encoder: non-finite pixel value");

    const std::size_t d = config_.token_dim;
    const std::size_t p = geom.patch_size_px();
    const std::size_t fan_in = p * p * pixels.channels;
    const TokenLayout layout = token_layout(geom, config_.register_count);

    // Flatten patches as (y, x, channel) within each block.
    Matrix flat(layout.patch_count, fan_in);
    for (std::size_t pr = 0; pr < geom.patch_rows(); ++pr) {
        for (std::size_t pc = 0; pc < geom.patch_cols(); ++pc) {
            auto dst = flat.row(pr * geom.patch_cols() + pc);
            std::size_t k = 0;
            for (std::size_t y = 0; y < p; ++y) {
                for (std::size_t x = 0; x < p; ++x) {
                    for (std::size_t c = 0; c < pixels.channels; ++c) {
                        dst[k++] = pixels.at(pr * p + y, pc * p + x, c);
                    }
                }
            }
        }
    }
    const Matrix embedded = matmul(flat, patch_embedding(fan_in));
    const Matrix pos = sinusoidal_position_2d(geom.patch_rows(), geom.patch_cols(), d);

    Matrix x(layout.total_count(), d);
    std::copy(cls_.data().begin(), cls_.data().end(), x.row(layout.cls_position()).begin());
    for (std::size_t r = 0; r < config_.register_count; ++r) {
        auto src = registers_.row(r);
        std::copy(src.begin(), src.end(), x.row(layout.first_register() + r).begin());
    }
    for (std::size_t i = 0; i < layout.patch_count; ++i) {
        auto dst = x.row(layout.patch_position(i));
        for (std::size_t c = 0; c < d; ++c) dst[c] = embedded(i, c) + pos(i, c);
    }

    if (trace != nullptr) trace->attention.clear();
    for (const Block& block : blocks_) {
        const Matrix normed = layer_norm(x);
        AttentionCapture capture;
        AttentionOptions options;
        options.capture_probabilities = trace != nullptr;
        const Matrix attended = multi_head_attention(matmul(normed, block.wq), matmul(normed, block.wk),
                                                     matmul(normed, block.wv), config_.head_count, options,
                                                     &capture);
        const Matrix projected = matmul(attended, block.wo);
        for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] += projected.data()[i];
        if (trace != nullptr) trace->attention.push_back(std::move(capture.probabilities));

        Matrix hidden = matmul(layer_norm(x), block.w1);
        for (double& v : hidden.data()) v = gelu(v);
        const Matrix ff = matmul(hidden, block.w2);
        for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] += ff.data()[i];
    }
    require(x.all_finite(), ErrorCategory::numeric, "encoder: non-finite token values");
    return TokenSequence{layout, std::move(x)};
}

CroppedEncoding ToyEncoder::encode_cropped(const PixelGrid& pixels, const RegionMask& mask,
                                           const ImageGeometry& geom) const {
    require(mask.rows == geom.height_px() && mask.cols == geom.width_px(), ErrorCategory::geometry,
            "encoder: mask does not match image geometry");
    std::size_t top = mask.rows, bottom = 0, left = mask.cols, right = 0;
    for (std::size_t y = 0; y < mask.rows; ++y) {
        for (std::size_t x = 0; x < mask.cols; ++x) {
            if (mask.at(y, x) == 0) continue;
            top = std::min(top, y);
            bottom = std::max(bottom, y + 1);
            left = std::min(left, x);
            right = std::max(right, x + 1);
        }
    }
    require(top < bottom, ErrorCategory::empty_region, "encoder: mask selects no pixels");

    const std::size_t p = geom.patch_size_px();
    const std::size_t row0 = top / p;
    const std::size_t col0 = left / p;
    const std::size_t row1 = (bottom + p - 1) / p;
    const std::size_t col1 = (right + p - 1) / p;
    const ImageGeometry crop_geom((row1 - row0) * p, (col1 - col0) * p, p);

    PixelGrid crop(crop_geom.height_px(), crop_geom.width_px(), pixels.channels);
    for (std::size_t y = 0; y < crop.height; ++y) {
        for (std::size_t x = 0; x < crop.width; ++x) {
            const std::size_t sy = row0 * p + y;
            const std::size_t sx = col0 * p + x;
            if (mask.at(sy, sx) == 0) continue;
            for (std::size_t c = 0; c < pixels.channels; ++c) crop.at(y, x, c) = pixels.at(sy, sx, c);
        }
    }
    return CroppedEncoding{encode_image(crop, crop_geom), crop_geom, row0, col0, geom.patch_cols()};
}

}  // namespace fusecond
