#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fusecond/alignment.hpp"
#include "fusecond/config.hpp"
#include "fusecond/fusion.hpp"
#include "fusecond/sparse_voxel.hpp"

namespace fusecond {

struct LocalResult {
    SourceId id;
    TokenSequence tokens;         // full-image tokens (cropped tokens in the ablation mode)
    TokenIndexSet selection;      // D_k, indices into `tokens`' patch grid
    std::size_t patch_total = 0;  // patches of the full condition image
    Matrix alignment_logits;      // head-summed L x T_k logits used for the forward pass
    ForwardAlignment forward;
    double lambda = 1.0;
};

struct GlobalResult {
    TokenSequence tokens;
    Matrix alignment_logits;
    ReverseAlignment reverse;
    double lambda = 1.0;
};

struct RunArtifacts {
    PipelineConfig config;
    std::vector<VoxelCoord> positions;
    std::vector<LocalResult> locals;
    GlobalResult global;
    VoxelSelection unaligned;
    UnifiedConditionTokens unified;
    std::optional<Matrix> enhancement;
    std::optional<SparseVoxelLatent> initial;  // global-conditioned latents (inpaint mode)
    std::optional<SparseVoxelLatent> final_slat;
    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, double>> timings;  // seconds per stage
};

PixelGrid load_pixels(const std::filesystem::path& path);
void save_pixels(const std::filesystem::path& path, const PixelGrid& pixels);

// Stages up to and including reverse alignment: encode, initialize voxels,
// select D_k, forward-align each local image, complement, reverse-align.
RunArtifacts run_alignment(const PipelineConfig& config);

// Full generation in the configured mode.
RunArtifacts run_pipeline(const PipelineConfig& config);

// Writes every artifact into `dir`. Everything except timings.txt is a pure
// function of the configuration.
void write_artifacts(const RunArtifacts& artifacts, const std::filesystem::path& dir);

// Per-source alignment summary: voxel counts before/after refinement, a
// 16-bin score histogram and the selected token count.
std::string format_alignment_report(const RunArtifacts& artifacts);

inline constexpr std::size_t kHistogramBins = 16;
std::vector<std::size_t> score_histogram(const std::vector<double>& scores);

// "INDEX <universe> <count>" then the indices on one line.
std::string format_index_file(const std::vector<std::size_t>& indices, std::size_t universe);
std::pair<std::vector<std::size_t>, std::size_t> parse_index_file(const std::string& text);

}  // namespace fusecond
