#include "fusecond/config.hpp"

#include <array>
#include <charconv>
#include <functional>
#include <sstream>

#include "fusecond/error.hpp"
#include "fusecond/fusion.hpp"
#include "fusecond/random.hpp"
#include "fusecond/tensor_io.hpp"

namespace fusecond {

const char* to_string(PipelineMode mode) noexcept {
    switch (mode) {
        case PipelineMode::full: return "full";
        case PipelineMode::inpaint: return "inpaint";
        case PipelineMode::no_mcfm_ablation: return "no_mcfm_ablation";
    }
    return "?";
}

PipelineMode parse_mode(const std::string& text) {
    if (text == "full") return PipelineMode::full;
    if (text == "inpaint") return PipelineMode::inpaint;
    if (text == "no_mcfm_ablation") return PipelineMode::no_mcfm_ablation;
    fail(ErrorCategory::config, "unknown mode '" + text + "'");
}

void PipelineConfig::resolve_seeds() {
    encoder.seed = derive_seed(seed, "encoder");
    flow.seed = derive_seed(seed, "flow");
    sampler.noise_seed = derive_seed(seed, "sampler");
    flow.token_dim = encoder.token_dim;
}

std::uint64_t PipelineConfig::alignment_noise_seed() const { return derive_seed(seed, "alignment"); }

void PipelineConfig::validate() const {
    require(!global_image.empty(), ErrorCategory::config, "config: global.image is required");
    require(!locals.empty(), ErrorCategory::config, "config: at least one local source is required");
    require(patch_size > 0, ErrorCategory::config, "config: image.patch_size must be positive");
    require(mask_coverage >= 0.0 && mask_coverage <= 1.0, ErrorCategory::config,
            "config: mask.coverage must lie in [0, 1]");
    require(beta >= 0.0, ErrorCategory::config, "config: enhance.beta must be >= 0");
    require(flow.token_dim == encoder.token_dim, ErrorCategory::config,
            "config: flow token width must equal encoder.token_dim");
    require(threads >= 1, ErrorCategory::config, "config: threads must be >= 1");
    encoder.validate();
    flow.validate();
    sampler.validate();
    alignment.validate();
    for (const auto& [name, value] : lambda_overrides) {
        const auto id = SourceId::parse(name);
        require(id.is_global() || id.index <= locals.size(), ErrorCategory::config,
                "config: lambda override for unknown source " + name);
        require(value > 0.0, ErrorCategory::config, "config: lambda for " + name + " must be positive");
    }
    auto exists = [](const std::filesystem::path& p, const char* what) {
        require(std::filesystem::exists(p), ErrorCategory::config,
                std::string("config: ") + what + " not found: " + p.string());
    };
    exists(global_image, "global image");
    for (const auto& l : locals) {
        exists(l.image, "local image");
        exists(l.mask, "local mask");
    }
}

std::string format_double(double value) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        fail(ErrorCategory::config, "config: invalid value '" + value + "' for " + key);
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    fail(ErrorCategory::config, "config: expected true/false for " + key);
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number<std::size_t>(key, trim(item)));
    return out;
}

std::string format_list(const std::vector<std::size_t>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ",";
        out += std::to_string(values[i]);
    }
    return out;
}

std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& value) {
    std::filesystem::path p(value);
    return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    PipelineConfig cfg;
    std::map<std::size_t, LocalInput> locals;

    using Setter = std::function<void(const std::string& key, const std::string& value)>;
    const std::map<std::string, Setter> setters = {
        {"seed", [&](auto& k, auto& v) { cfg.seed = parse_number<std::uint64_t>(k, v); }},
        {"mode", [&](auto&, auto& v) { cfg.mode = parse_mode(v); }},
        {"threads", [&](auto& k, auto& v) { cfg.threads = parse_number<std::size_t>(k, v); }},
        {"global.image", [&](auto&, auto& v) { cfg.global_image = resolve_path(base_dir, v); }},
        {"image.patch_size", [&](auto& k, auto& v) { cfg.patch_size = parse_number<std::size_t>(k, v); }},
        {"mask.coverage", [&](auto& k, auto& v) { cfg.mask_coverage = parse_number<double>(k, v); }},
        {"encoder.token_dim", [&](auto& k, auto& v) { cfg.encoder.token_dim = parse_number<std::size_t>(k, v); }},
        {"encoder.depth", [&](auto& k, auto& v) { cfg.encoder.depth = parse_number<std::size_t>(k, v); }},
        {"encoder.heads", [&](auto& k, auto& v) { cfg.encoder.head_count = parse_number<std::size_t>(k, v); }},
        {"encoder.registers", [&](auto& k, auto& v) { cfg.encoder.register_count = parse_number<std::size_t>(k, v); }},
        {"flow.latent_dim", [&](auto& k, auto& v) { cfg.flow.latent_dim = parse_number<std::size_t>(k, v); }},
        {"flow.heads", [&](auto& k, auto& v) { cfg.flow.head_count = parse_number<std::size_t>(k, v); }},
        {"flow.blocks", [&](auto& k, auto& v) { cfg.flow.block_count = parse_number<std::size_t>(k, v); }},
        {"flow.structure_resolution",
         [&](auto& k, auto& v) { cfg.flow.structure_resolution = parse_number<std::uint32_t>(k, v); }},
        {"flow.grid_size", [&](auto& k, auto& v) { cfg.flow.grid_size = parse_number<std::uint32_t>(k, v); }},
        {"flow.structure_bias", [&](auto& k, auto& v) { cfg.flow.structure_bias = parse_number<double>(k, v); }},
        {"flow.structure_prior_gain",
         [&](auto& k, auto& v) { cfg.flow.structure_prior_gain = parse_number<double>(k, v); }},
        {"flow.structure_prior_radius",
         [&](auto& k, auto& v) { cfg.flow.structure_prior_radius = parse_number<double>(k, v); }},
        {"flow.query_gain", [&](auto& k, auto& v) { cfg.flow.query_gain = parse_number<double>(k, v); }},
        {"flow.position_gain", [&](auto& k, auto& v) { cfg.flow.position_gain = parse_number<double>(k, v); }},
        {"flow.enhanced_blocks",
         [&](auto& k, auto& v) { cfg.flow.enhanced_blocks = v == "all" ? std::vector<std::size_t>{} : parse_list(k, v); }},
        {"sampler.steps", [&](auto& k, auto& v) { cfg.sampler.step_count = parse_number<std::size_t>(k, v); }},
        {"sampler.capture_step", [&](auto& k, auto& v) { cfg.sampler.capture_step = parse_number<std::size_t>(k, v); }},
        {"alignment.threshold", [&](auto& k, auto& v) { cfg.alignment.score_threshold = parse_number<double>(k, v); }},
        {"alignment.reverse_threshold",
         [&](auto& k, auto& v) { cfg.alignment.reverse_threshold = parse_number<double>(k, v); }},
        {"alignment.heads",
         [&](auto& k, auto& v) { cfg.alignment.heads = v == "auto" ? std::vector<std::size_t>{} : parse_list(k, v); }},
        {"alignment.head_count",
         [&](auto& k, auto& v) { cfg.alignment.auto_head_count = parse_number<std::size_t>(k, v); }},
        {"alignment.block", [&](auto& k, auto& v) { cfg.alignment.block_index = parse_number<std::size_t>(k, v); }},
        {"alignment.average_blocks", [&](auto& k, auto& v) { cfg.alignment.average_blocks = parse_bool(k, v); }},
        {"refine.enabled", [&](auto& k, auto& v) { cfg.alignment.refine = parse_bool(k, v); }},
        {"refine.k", [&](auto& k, auto& v) { cfg.alignment.refine_params.k = parse_number<std::size_t>(k, v); }},
        {"refine.fill", [&](auto& k, auto& v) { cfg.alignment.refine_params.fill_fraction = parse_number<double>(k, v); }},
        {"refine.clear",
         [&](auto& k, auto& v) { cfg.alignment.refine_params.clear_fraction = parse_number<double>(k, v); }},
        {"enhance.beta", [&](auto& k, auto& v) { cfg.beta = parse_number<double>(k, v); }},
    };

    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(ErrorCategory::config, "config line " + std::to_string(line_no) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (auto it = setters.find(key); it != setters.end()) {
            it->second(key, value);
            continue;
        }
        if (key.rfind("lambda.", 0) == 0) {
            const std::string source = key.substr(7);
            SourceId::parse(source);
            cfg.lambda_overrides[source] = parse_number<double>(key, value);
            continue;
        }
        // local<k>.image / local<k>.mask
        if (key.rfind("local", 0) == 0) {
            const auto dot = key.find('.');
            if (dot != std::string::npos) {
                const std::string field = key.substr(dot + 1);
                const std::string index = key.substr(5, dot - 5);
                std::size_t k = 0;
                auto [ptr, ec] = std::from_chars(index.data(), index.data() + index.size(), k);
                if (ec == std::errc() && ptr == index.data() + index.size() && k >= 1 &&
                    (field == "image" || field == "mask")) {
                    (field == "image" ? locals[k].image : locals[k].mask) = resolve_path(base_dir, value);
                    continue;
                }
            }
        }
        fail(ErrorCategory::config, "config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }

    std::size_t expected = 1;
    for (auto& [k, input] : locals) {
        require(k == expected++, ErrorCategory::config, "config: local sources must be numbered 1..K without gaps");
        require(!input.image.empty() && !input.mask.empty(), ErrorCategory::config,
                "config: local" + std::to_string(k) + " needs both image and mask");
        cfg.locals.push_back(input);
    }
    cfg.resolve_seeds();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_file(path), path.parent_path());
}

std::string format_config(const PipelineConfig& c, bool include_threads) {
    std::ostringstream out;
    auto kv = [&](const std::string& k, const std::string& v) { out << k << '=' << v << '\n'; };
    kv("seed", std::to_string(c.seed));
    kv("mode", to_string(c.mode));
    if (include_threads) kv("threads", std::to_string(c.threads));
    kv("global.image", c.global_image.string());
    for (std::size_t k = 0; k < c.locals.size(); ++k) {
        const std::string p = "local" + std::to_string(k + 1);
        kv(p + ".image", c.locals[k].image.string());
        kv(p + ".mask", c.locals[k].mask.string());
    }
    kv("image.patch_size", std::to_string(c.patch_size));
    kv("mask.coverage", format_double(c.mask_coverage));
    kv("encoder.token_dim", std::to_string(c.encoder.token_dim));
    kv("encoder.depth", std::to_string(c.encoder.depth));
    kv("encoder.heads", std::to_string(c.encoder.head_count));
    kv("encoder.registers", std::to_string(c.encoder.register_count));
    kv("flow.latent_dim", std::to_string(c.flow.latent_dim));
    kv("flow.heads", std::to_string(c.flow.head_count));
    kv("flow.blocks", std::to_string(c.flow.block_count));
    kv("flow.structure_resolution", std::to_string(c.flow.structure_resolution));
    kv("flow.grid_size", std::to_string(c.flow.grid_size));
    kv("flow.structure_bias", format_double(c.flow.structure_bias));
    kv("flow.structure_prior_gain", format_double(c.flow.structure_prior_gain));
    kv("flow.structure_prior_radius", format_double(c.flow.structure_prior_radius));
    kv("flow.query_gain", format_double(c.flow.query_gain));
    kv("flow.position_gain", format_double(c.flow.position_gain));
    kv("flow.enhanced_blocks", c.flow.enhanced_blocks.empty() ? "all" : format_list(c.flow.enhanced_blocks));
    kv("sampler.steps", std::to_string(c.sampler.step_count));
    kv("sampler.capture_step", std::to_string(c.sampler.capture_step));
    kv("alignment.threshold", format_double(c.alignment.score_threshold));
    kv("alignment.reverse_threshold", format_double(c.alignment.reverse_threshold));
    kv("alignment.heads", c.alignment.heads.empty() ? "auto" : format_list(c.alignment.heads));
    kv("alignment.head_count", std::to_string(c.alignment.auto_head_count));
    kv("alignment.block", std::to_string(c.alignment.block_index));
    kv("alignment.average_blocks", c.alignment.average_blocks ? "true" : "false");
    kv("refine.enabled", c.alignment.refine ? "true" : "false");
    kv("refine.k", std::to_string(c.alignment.refine_params.k));
    kv("refine.fill", format_double(c.alignment.refine_params.fill_fraction));
    kv("refine.clear", format_double(c.alignment.refine_params.clear_fraction));
    kv("enhance.beta", format_double(c.beta));
    for (const auto& [name, value] : c.lambda_overrides) kv("lambda." + name, format_double(value));
    out << "# derived encoder.seed=" << c.encoder.seed << '\n';
    out << "# derived flow.seed=" << c.flow.seed << '\n';
    out << "# derived sampler.noise_seed=" << c.sampler.noise_seed << '\n';
    out << "# derived alignment.noise_seed=" << c.alignment_noise_seed() << '\n';
    return out.str();
}

}  // namespace fusecond
