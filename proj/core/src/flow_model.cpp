#include "fusecond/flow_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fusecond/attention.hpp"
#include "fusecond/embedding.hpp"
#include "fusecond/error.hpp"
#include "fusecond/random.hpp"

namespace fusecond {

void FlowModelConfig::validate() const {
    require(latent_dim > 0 && token_dim > 0, ErrorCategory::config, "flow: dimensions must be positive");
    require(head_count > 0 && latent_dim % head_count == 0, ErrorCategory::config,
            "flow: latent_dim must be divisible by head_count");
    require(structure_resolution > 0 && structure_resolution <= grid_size, ErrorCategory::config,
            "flow: require 0 < structure_resolution <= grid_size");
    require(std::isfinite(structure_bias) && std::isfinite(structure_prior_gain) && structure_prior_radius > 0.0,
            ErrorCategory::config, "flow: structure prior needs finite values and a positive radius");
    require(query_gain > 0.0 && position_gain >= 0.0, ErrorCategory::config,
            "flow: query_gain must be positive and position_gain non-negative");
    for (auto b : enhanced_blocks) {
        require(b < block_count, ErrorCategory::config, "flow: enhanced block index out of range");
    }
}

bool FlowModelConfig::block_is_enhanced(std::size_t block) const {
    return enhanced_blocks.empty() ||
           std::find(enhanced_blocks.begin(), enhanced_blocks.end(), block) != enhanced_blocks.end();
}

void SamplerConfig::validate() const {
    require(step_count >= 1, ErrorCategory::config, "sampler: step_count must be >= 1");
    require(capture_step < step_count, ErrorCategory::config, "sampler: capture_step must be < step_count");
}

std::size_t CrossAttentionRecord::voxel_count() const noexcept {
    return head_count() == 0 ? 0 : logits.front().front().rows();
}

std::size_t CrossAttentionRecord::token_count() const noexcept {
    return head_count() == 0 ? 0 : logits.front().front().cols();
}

namespace {

Matrix scaled(Matrix m, double gain) {
    for (double& v : m.data()) v *= gain;
    return m;
}

}  // namespace

FlowWeights FlowWeights::seeded(const FlowModelConfig& config) {
    const std::size_t c = config.latent_dim;
    const std::size_t d = config.token_dim;
    const std::size_t hidden = 2 * c;
    const auto seed = config.seed;
    FlowWeights w;
    for (std::size_t b = 0; b < config.block_count; ++b) {
        const std::string p = "flow/block" + std::to_string(b) + "/";
        w.blocks.push_back(Block{
            scaled(xavier_matrix(c, c, derive_seed(seed, p + "wq")), config.query_gain),
            xavier_matrix(d, c, derive_seed(seed, p + "wk")),
            xavier_matrix(d, c, derive_seed(seed, p + "wv")),
            xavier_matrix(c, c, derive_seed(seed, p + "wo")),
            xavier_matrix(c, hidden, derive_seed(seed, p + "w1")),
            xavier_matrix(hidden, c, derive_seed(seed, p + "w2")),
        });
    }
    w.w_out = xavier_matrix(c, c, derive_seed(seed, "flow/out"));
    const std::size_t cells = std::size_t{config.structure_resolution} * config.structure_resolution *
                              config.structure_resolution;
    w.structure = xavier_matrix(d, cells, derive_seed(seed, "flow/structure"));
    return w;
}

FlowModel::FlowModel(FlowModelConfig config) : FlowModel(config, FlowWeights::seeded(config)) {}

FlowModel::FlowModel(FlowModelConfig config, FlowWeights weights)
    : config_(std::move(config)), weights_(std::move(weights)) {
    config_.validate();
    require(weights_.blocks.size() == config_.block_count, ErrorCategory::model, "flow: block weight count mismatch");
    require(weights_.w_out.rows() == config_.latent_dim && weights_.w_out.cols() == config_.latent_dim,
            ErrorCategory::model, "flow: output weight shape mismatch");
}

std::vector<double> FlowModel::structure_logits(const TokenSequence& global_tokens) const {
    require(global_tokens.token_dim() == config_.token_dim, ErrorCategory::model,
            "flow: global token width does not match token_dim");
    const auto& layout = global_tokens.layout;
    require(layout.patch_count > 0, ErrorCategory::model, "flow: global image has no patch tokens");
    Matrix pooled(1, config_.token_dim);
    for (std::size_t i = 0; i < layout.patch_count; ++i) {
        const auto row = global_tokens.tokens.row(layout.patch_position(i));
        for (std::size_t c = 0; c < row.size(); ++c) pooled(0, c) += row[c];
    }
    for (double& v : pooled.data()) v /= static_cast<double>(layout.patch_count);
    Matrix logits = matmul(layer_norm(pooled), weights_.structure);
    const std::uint32_t d = config_.structure_resolution;
    const double centre = 0.5 * static_cast<double>(d);
    const double radius = config_.structure_prior_radius * static_cast<double>(d);
    for (std::uint32_t x = 0; x < d; ++x) {
        for (std::uint32_t y = 0; y < d; ++y) {
            for (std::uint32_t z = 0; z < d; ++z) {
                const double dx = x + 0.5 - centre, dy = y + 0.5 - centre, dz = z + 0.5 - centre;
                const double r2 = (dx * dx + dy * dy + dz * dz) / (radius * radius);
                logits(0, (std::size_t{x} * d + y) * d + z) +=
                    config_.structure_bias + config_.structure_prior_gain * (1.0 - r2);
            }
        }
    }
    return std::move(logits.data());
}

std::vector<VoxelCoord> FlowModel::init_voxels_from_global(const TokenSequence& global_tokens) const {
    const auto logits = structure_logits(global_tokens);
    const std::uint32_t d = config_.structure_resolution;
    const std::uint32_t n = config_.grid_size;
    auto cell_of = [&](std::uint32_t v) { return static_cast<std::uint32_t>(std::uint64_t{v} * d / n); };

    DenseBinaryGrid grid(n);
    bool any = false;
    for (std::uint32_t x = 0; x < n; ++x) {
        for (std::uint32_t y = 0; y < n; ++y) {
            for (std::uint32_t z = 0; z < n; ++z) {
                const std::size_t cell = (std::size_t{cell_of(x)} * d + cell_of(y)) * d + cell_of(z);
                if (logits[cell] >= 0.0) {
                    grid.at(x, y, z) = 1;
                    any = true;
                }
            }
        }
    }
    if (!any) {
        const auto best = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
        const std::uint32_t cx = static_cast<std::uint32_t>(best / (std::size_t{d} * d));
        const std::uint32_t cy = static_cast<std::uint32_t>((best / d) % d);
        const std::uint32_t cz = static_cast<std::uint32_t>(best % d);
        // First lattice voxel that maps into the winning cell.
        auto first_voxel = [&](std::uint32_t c) {
            return static_cast<std::uint32_t>((std::uint64_t{c} * n + d - 1) / d);
        };
        grid.at(first_voxel(cx), first_voxel(cy), first_voxel(cz)) = 1;
    }
    return grid_to_positions(grid);
}

VelocityResult FlowModel::velocity(const SparseVoxelLatent& state, double t, const Matrix& tokens,
                                   const VelocityOptions& options) const {
    const std::size_t count = state.voxel_count();
    const std::size_t c = config_.latent_dim;
    require(state.latents.rows() == count && state.latents.cols() == c, ErrorCategory::model,
            "flow: latent shape does not match the model");
    require(tokens.cols() == config_.token_dim, ErrorCategory::model, "flow: token width mismatch");
    require(tokens.rows() > 0, ErrorCategory::model, "flow: no condition tokens");
    if (options.enhancement != nullptr) {
        require(options.enhancement->rows() == count && options.enhancement->cols() == tokens.rows(),
                ErrorCategory::model, "flow: enhancement matrix must be L x T");
    }

    const Matrix pos = sinusoidal_position_3d(state.positions, c);
    const auto temb = timestep_embedding(t, c);

    VelocityResult result;
    result.record.t = t;
    Matrix x = state.latents;
    for (std::size_t b = 0; b < weights_.blocks.size(); ++b) {
        const auto& w = weights_.blocks[b];
        for (std::size_t i = 0; i < count; ++i) {
            auto row = x.row(i);
            for (std::size_t j = 0; j < c; ++j) row[j] += config_.position_gain * pos(i, j) + temb[j];
        }
        AttentionOptions attn;
        attn.logit_scale = config_.block_is_enhanced(b) ? options.enhancement : nullptr;
        attn.capture_logits = options.capture;
        attn.threads = options.threads;
        AttentionCapture capture;
        const Matrix attended = multi_head_attention(matmul(layer_norm(x), w.wq), matmul(tokens, w.wk),
                                                     matmul(tokens, w.wv), config_.head_count, attn, &capture);
        const Matrix projected = matmul(attended, w.wo);
        for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] += projected.data()[i];
        if (options.capture) result.record.logits.push_back(std::move(capture.logits));

        Matrix hidden = matmul(layer_norm(x), w.w1);
        for (double& v : hidden.data()) v = gelu(v);
        const Matrix ff = matmul(hidden, w.w2);
        for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] += ff.data()[i];
    }
    result.velocity = matmul(layer_norm(x), weights_.w_out);
    return result;
}

Matrix initial_noise(std::size_t rows, std::size_t cols, std::uint64_t noise_seed) {
    return normal_matrix(rows, cols, derive_seed(noise_seed, "flow/noise"));
}

Matrix noise_to(const Matrix& z0, double t, std::uint64_t noise_seed) {
    require(t >= 0.0 && t <= 1.0, ErrorCategory::parameter, "noise_to: t must lie in [0, 1]");
    if (t == 0.0) return z0;
    Matrix eps = initial_noise(z0.rows(), z0.cols(), noise_seed);
    if (t == 1.0) return eps;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        eps.data()[i] = (1.0 - t) * z0.data()[i] + t * eps.data()[i];
    }
    return eps;
}

double step_time(std::size_t step, std::size_t step_count) {
    return static_cast<double>(step_count - step) / static_cast<double>(step_count);
}

namespace {

void euler_step(Matrix& z, const Matrix& v, double dt) {
    for (std::size_t i = 0; i < z.size(); ++i) z.data()[i] -= dt * v.data()[i];
    require(z.all_finite(), ErrorCategory::numeric, "flow: sampling diverged (non-finite latents)");
}

}  // namespace

SampleResult FlowModel::sample(const std::vector<VoxelCoord>& positions, const Matrix& tokens,
                               const SamplerConfig& sampler, const Matrix* enhancement,
                               std::size_t threads) const {
    sampler.validate();
    require(!positions.empty(), ErrorCategory::model, "flow: no voxels to sample");
    SampleResult out;
    out.slat.grid_size = config_.grid_size;
    out.slat.positions = positions;
    out.slat.latents = initial_noise(positions.size(), config_.latent_dim, sampler.noise_seed);
    const double dt = 1.0 / static_cast<double>(sampler.step_count);
    for (std::size_t s = 0; s < sampler.step_count; ++s) {
        VelocityOptions options;
        options.enhancement = enhancement;
        options.capture = s == sampler.capture_step;
        options.threads = threads;
        auto v = velocity(out.slat, step_time(s, sampler.step_count), tokens, options);
        if (options.capture) out.captured = std::move(v.record);
        euler_step(out.slat.latents, v.velocity, dt);
    }
    return out;
}

CrossAttentionRecord FlowModel::capture_attention(const std::vector<VoxelCoord>& positions, const Matrix& tokens,
                                                  const SamplerConfig& sampler, std::size_t threads) const {
    sampler.validate();
    require(!positions.empty(), ErrorCategory::model, "flow: no voxels to sample");
    SparseVoxelLatent state{config_.grid_size, positions,
                            initial_noise(positions.size(), config_.latent_dim, sampler.noise_seed)};
    const double dt = 1.0 / static_cast<double>(sampler.step_count);
    for (std::size_t s = 0;; ++s) {
        VelocityOptions options;
        options.capture = s == sampler.capture_step;
        options.threads = threads;
        auto v = velocity(state, step_time(s, sampler.step_count), tokens, options);
        if (options.capture) return std::move(v.record);
        euler_step(state.latents, v.velocity, dt);
    }
}

SparseVoxelLatent FlowModel::sample_inpaint(const SparseVoxelLatent& initial, const Matrix& tokens,
                                            const VoxelSelection& unaligned, const SamplerConfig& sampler,
                                            std::size_t threads) const {
    sampler.validate();
    initial.validate();
    validate(unaligned, initial.voxel_count());
    require(initial.channels() == config_.latent_dim, ErrorCategory::model, "flow: initial latent width mismatch");

    SparseVoxelLatent state{config_.grid_size, initial.positions,
                            initial_noise(initial.voxel_count(), config_.latent_dim, sampler.noise_seed)};
    const double dt = 1.0 / static_cast<double>(sampler.step_count);
    for (std::size_t s = 0; s < sampler.step_count; ++s) {
        VelocityOptions options;
        options.threads = threads;
        auto v = velocity(state, step_time(s, sampler.step_count), tokens, options);
        euler_step(state.latents, v.velocity, dt);
        if (unaligned.empty()) continue;
        const Matrix replacement = noise_to(initial.latents, step_time(s + 1, sampler.step_count), sampler.noise_seed);
        for (auto i : unaligned.indices) {
            const auto src = replacement.row(i);
            std::copy(src.begin(), src.end(), state.latents.row(i).begin());
        }
    }
    return state;
}

}  // namespace fusecond
