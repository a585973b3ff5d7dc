#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fusecond/matrix.hpp"
#include "fusecond/sparse_voxel.hpp"
#include "fusecond/toy_encoder.hpp"

namespace fusecond {

struct FlowModelConfig {
    std::size_t latent_dim = 32;
    std::size_t token_dim = 64;
    std::size_t head_count = 4;
    std::size_t block_count = 2;
    std::uint32_t structure_resolution = 16;  // D: structure logits live on a D^3 grid
    std::uint32_t grid_size = 32;             // N: output lattice resolution
    // Bias of the structure layer: structure_bias + prior_gain * (1 - (r / (prior_radius * D))^2),
    // r the distance of a cell centre from the grid centre. A zero gain leaves a constant bias.
    double structure_bias = 0.0;
    double structure_prior_gain = 1.0;
    double structure_prior_radius = 0.22;
    double query_gain = 4.0;     // scale on the seeded query weights; > 1 sharpens attention
    double position_gain = 6.0;  // scale on the 3D positional embedding added per block
    std::vector<std::size_t> enhanced_blocks;  // blocks that apply E; empty means all
    std::uint64_t seed = 0;

    void validate() const;
    bool block_is_enhanced(std::size_t block) const;
};

struct SamplerConfig {
    std::size_t step_count = 25;
    std::uint64_t noise_seed = 0;
    std::size_t capture_step = 0;  // step whose attention is recorded; 0 is t = 1

    void validate() const;
};

// Pre-softmax cross-attention logits, [block][head] each L x T, scaled by
// 1 / sqrt(C / h) and captured before any enhancement is applied.
struct CrossAttentionRecord {
    std::vector<std::vector<Matrix>> logits;
    double t = 1.0;

    std::size_t block_count() const noexcept { return logits.size(); }
    std::size_t head_count() const noexcept { return logits.empty() ? 0 : logits.front().size(); }
    std::size_t voxel_count() const noexcept;
    std::size_t token_count() const noexcept;
};

struct FlowWeights {
    struct Block {
        Matrix wq, wk, wv, wo;  // wk, wv map token_dim -> latent_dim
        Matrix w1, w2;
    };
    std::vector<Block> blocks;
    Matrix w_out;      // latent_dim x latent_dim
    Matrix structure;  // token_dim x D^3

    static FlowWeights seeded(const FlowModelConfig& config);
};

struct VelocityOptions {
    const Matrix* enhancement = nullptr;  // L x T multiplier for the logits
    bool capture = false;
    std::size_t threads = 1;
};

struct VelocityResult {
    Matrix velocity;  // L x C
    CrossAttentionRecord record;
};

struct SampleResult {
    SparseVoxelLatent slat;
    std::optional<CrossAttentionRecord> captured;
};

// Structure stand-in plus a rectified-flow transformer over voxel latents.
// Convention: data at t = 0, noise at t = 1, z_t = (1 - t) z_0 + t eps, and
// sampling integrates dz/dt = v from t = 1 down to t = 0 with uniform Euler
// steps.
class FlowModel {
public:
    explicit FlowModel(FlowModelConfig config);
    FlowModel(FlowModelConfig config, FlowWeights weights);

    const FlowModelConfig& config() const noexcept { return config_; }
    const FlowWeights& weights() const noexcept { return weights_; }

    // D^3 logits from the layer-normalized mean of the patch tokens.
    std::vector<double> structure_logits(const TokenSequence& global_tokens) const;

    // Nearest-neighbour upsampling of the logits to N^3, thresholded at 0.
    // When no logit is >= 0, only the first lattice voxel of the argmax cell
    // is activated.
    std::vector<VoxelCoord> init_voxels_from_global(const TokenSequence& global_tokens) const;

    VelocityResult velocity(const SparseVoxelLatent& state, double t, const Matrix& tokens,
                            const VelocityOptions& options = {}) const;

    SampleResult sample(const std::vector<VoxelCoord>& positions, const Matrix& tokens,
                        const SamplerConfig& sampler, const Matrix* enhancement = nullptr,
                        std::size_t threads = 1) const;

    // Runs `sampler.capture_step` Euler steps under `tokens` and returns the
    // attention record of the next velocity evaluation.
    CrossAttentionRecord capture_attention(const std::vector<VoxelCoord>& positions, const Matrix& tokens,
                                           const SamplerConfig& sampler, std::size_t threads = 1) const;

    // Sampling where, after every step, rows in `unaligned` are reset to
    // noise_to(z0, t) with z0 the latents of `initial`.
    SparseVoxelLatent sample_inpaint(const SparseVoxelLatent& initial, const Matrix& tokens,
                                     const VoxelSelection& unaligned, const SamplerConfig& sampler,
                                     std::size_t threads = 1) const;

private:
    FlowModelConfig config_;
    FlowWeights weights_;
};

// Initial noise of a trajectory: L x C standard normal from the seed.
Matrix initial_noise(std::size_t rows, std::size_t cols, std::uint64_t noise_seed);

// (1 - t) z0 + t eps with eps = initial_noise(z0 shape, seed); exact at t = 0
// and t = 1.
Matrix noise_to(const Matrix& z0, double t, std::uint64_t noise_seed);

// Time at the start of Euler step s of n: 1 - s / n.
double step_time(std::size_t step, std::size_t step_count);

}  // namespace fusecond
