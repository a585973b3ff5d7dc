#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fusecond/alignment.hpp"
#include "fusecond/flow_model.hpp"
#include "fusecond/patch_grid.hpp"
#include "fusecond/toy_encoder.hpp"

namespace fusecond {

enum class PipelineMode { full, inpaint, no_mcfm_ablation };

const char* to_string(PipelineMode mode) noexcept;
PipelineMode parse_mode(const std::string& text);

struct LocalInput {
    std::filesystem::path image;
    std::filesystem::path mask;
};

struct PipelineConfig {
    std::filesystem::path global_image;
    std::vector<LocalInput> locals;
    std::size_t patch_size = kDefaultPatchSize;
    double mask_coverage = kDefaultCoverageThreshold;
    EncoderConfig encoder;
    FlowModelConfig flow;
    SamplerConfig sampler;
    AlignmentConfig alignment;
    double beta = 1.0;
    std::map<std::string, double> lambda_overrides;  // keyed by source name
    PipelineMode mode = PipelineMode::full;
    std::uint64_t seed = 0;
    std::size_t threads = 1;

    // Re-derives the per-stage seeds from the master seed and ties the flow
    // model's token width to the encoder. Call after changing `seed`.
    void resolve_seeds();

    // Seed for the attention-capture trajectories used by alignment.
    std::uint64_t alignment_noise_seed() const;

    void validate() const;
};

// Flat "key=value" text, '#' starts a comment. Unknown keys are rejected.
// Relative paths resolve against base_dir.
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

// Every resolved setting in the same key=value form (derived seeds appear as
// comments), so the text can be parsed back into an identical configuration.
// Run manifests leave out `threads`, which never affects results.
std::string format_config(const PipelineConfig& config, bool include_threads = true);

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

}  // namespace fusecond
