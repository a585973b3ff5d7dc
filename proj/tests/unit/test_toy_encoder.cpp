#include "doctest.h"

#include <cmath>

#include "fusecond/embedding.hpp"
#include "fusecond/error.hpp"
#include "fusecond/toy_encoder.hpp"
#include "fusecond_checks/oracles.hpp"

using namespace fusecond;

namespace {

EncoderConfig small_encoder(std::size_t depth, std::uint64_t seed = 3) {
    EncoderConfig cfg;
    cfg.token_dim = 16;
    cfg.depth = depth;
    cfg.head_count = 2;
    cfg.register_count = 2;
    cfg.seed = seed;
    return cfg;
}

PixelGrid random_pixels(SplitMix64& rng, std::size_t h, std::size_t w, std::size_t c = 3) {
    PixelGrid px(h, w, c);
    for (auto& v : px.values) v = rng.uniform();
    return px;
}

}  // namespace

TEST_CASE("encoder output shape and determinism") {
    SplitMix64 rng(21);
    const ImageGeometry geom(224, 224);
    const auto px = random_pixels(rng, 224, 224);
    EncoderConfig cfg = small_encoder(1);
    cfg.register_count = 4;
    const ToyEncoder enc(cfg);
    const auto a = enc.encode_image(px, geom);
    const auto b = ToyEncoder(cfg).encode_image(px, geom);
    CHECK(a.tokens.rows() == 261);
    CHECK(a.layout.total_count() == 261);
    CHECK(a.tokens == b.tokens);
    CHECK(a.tokens.all_finite());
}

TEST_CASE("depth 0 with identical patches differs only by positional encoding") {
    const ImageGeometry geom(42, 28);
    PixelGrid px(42, 28, 2);
    for (std::size_t y = 0; y < 42; ++y) {
        for (std::size_t x = 0; x < 28; ++x) {
            px.at(y, x, 0) = 0.1 * static_cast<double>(y % 14);
            px.at(y, x, 1) = 0.05 * static_cast<double>(x % 14);
        }
    }
    const ToyEncoder enc(small_encoder(0));
    const auto seq = enc.encode_image(px, geom);
    const Matrix pos = sinusoidal_position_2d(3, 2, 16);
    const auto first = seq.tokens.row(seq.layout.patch_position(0));
    for (std::size_t i = 1; i < 6; ++i) {
        const auto row = seq.tokens.row(seq.layout.patch_position(i));
        for (std::size_t c = 0; c < 16; ++c) {
            CHECK(row[c] - pos(i, c) == doctest::Approx(first[c] - pos(0, c)).epsilon(1e-12));
        }
    }
}

TEST_CASE("encoder rejects non-finite pixels and mismatched grids") {
    const ToyEncoder enc(small_encoder(1));
    const ImageGeometry geom(28, 28);
    PixelGrid px(28, 28, 3, 0.5);
    px.at(3, 4, 1) = NAN;
    try {
        enc.encode_image(px, geom);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.is_numeric());
    }
    CHECK_THROWS_AS(enc.encode_image(PixelGrid(14, 28, 3), geom), Error);
    CHECK_THROWS_AS(enc.encode_image(PixelGrid(28, 28, 0), geom), Error);
    EncoderConfig bad = small_encoder(1);
    bad.head_count = 3;
    CHECK_THROWS_AS(ToyEncoder{bad}, Error);
}

TEST_CASE("self-attention rows are probability vectors") {
    SplitMix64 rng(22);
    const ImageGeometry geom(42, 42);
    const ToyEncoder enc(small_encoder(2));
    EncoderTrace trace;
    enc.encode_image(random_pixels(rng, 42, 42), geom, &trace);
    REQUIRE(trace.attention.size() == 2);
    for (const auto& block : trace.attention) {
        for (const auto& head : block) {
            for (std::size_t i = 0; i < head.rows(); ++i) {
                double sum = 0.0;
                for (double p : head.row(i)) {
                    CHECK(p >= 0.0);
                    sum += p;
                }
                CHECK(std::abs(sum - 1.0) <= 1e-6);
            }
        }
    }
}

TEST_CASE("perturbing a pixel outside the region changes selected tokens") {
    SplitMix64 rng(23);
    const ImageGeometry geom(56, 56);
    const ToyEncoder enc(small_encoder(1, rng.next()));
    for (int trial = 0; trial < 10; ++trial) {
        auto px = random_pixels(rng, 56, 56);
        const auto before = enc.encode_image(px, geom);
        // Region = patch 0; perturb a pixel of the last patch.
        px.at(55, 55, 0) += 0.5;
        const auto after = enc.encode_image(px, geom);
        double change = 0.0;
        const auto a = before.tokens.row(before.layout.patch_position(0));
        const auto b = after.tokens.row(after.layout.patch_position(0));
        for (std::size_t c = 0; c < a.size(); ++c) change = std::max(change, std::abs(a[c] - b[c]));
        CHECK(change > 0.0);
    }
}

TEST_CASE("cropped encoding") {
    SplitMix64 rng(24);
    const ImageGeometry geom(56, 70);
    const auto px = random_pixels(rng, 56, 70);
    const ToyEncoder enc(small_encoder(2));

    SUBCASE("whole-image mask equals encode_image") {
        const auto crop = enc.encode_cropped(px, RegionMask(56, 70, 1), geom);
        CHECK(crop.geometry == geom);
        CHECK(crop.sequence.tokens == enc.encode_image(px, geom).tokens);
    }
    SUBCASE("partial mask changes selected tokens at depth >= 1") {
        RegionMask mask(56, 70);
        for (std::size_t y = 14; y < 42; ++y) {
            for (std::size_t x = 20; x < 50; ++x) mask.set(y, x, true);
        }
        const auto crop = enc.encode_cropped(px, mask, geom);
        CHECK(crop.patch_row_offset == 1);
        CHECK(crop.patch_col_offset == 1);
        CHECK(crop.geometry.patch_rows() == 2);
        CHECK(crop.geometry.patch_cols() == 3);
        const auto full = enc.encode_image(px, geom);
        const auto selected = patch_indices(downsample_mask(mask, geom));
        REQUIRE_FALSE(selected.empty());
        double diff = 0.0;
        for (auto i : selected.indices) {
            const auto j = crop.crop_patch_index(i);
            REQUIRE(j.has_value());
            const auto a = full.tokens.row(full.layout.patch_position(i));
            const auto b = crop.sequence.tokens.row(crop.sequence.layout.patch_position(*j));
            for (std::size_t c = 0; c < a.size(); ++c) diff = std::max(diff, std::abs(a[c] - b[c]));
        }
        CHECK(diff > 0.0);
        CHECK_FALSE(crop.crop_patch_index(0).has_value());
    }
    SUBCASE("depth 0 with an aligned crop keeps selected tokens") {
        const ToyEncoder flat(small_encoder(0));
        RegionMask mask(56, 70);
        for (std::size_t y = 0; y < 28; ++y) {
            for (std::size_t x = 0; x < 42; ++x) mask.set(y, x, true);
        }
        const auto crop = flat.encode_cropped(px, mask, geom);
        const auto full = flat.encode_image(px, geom);
        for (auto i : patch_indices(downsample_mask(mask, geom)).indices) {
            const auto j = crop.crop_patch_index(i);
            REQUIRE(j.has_value());
            const auto a = full.tokens.row(full.layout.patch_position(i));
            const auto b = crop.sequence.tokens.row(crop.sequence.layout.patch_position(*j));
            CHECK(std::equal(a.begin(), a.end(), b.begin()));
        }
    }
    SUBCASE("empty mask is an empty-region error") {
        try {
            enc.encode_cropped(px, RegionMask(56, 70), geom);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.category() == ErrorCategory::empty_region);
        }
    }
}
