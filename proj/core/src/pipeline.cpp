#include "fusecond/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "fusecond/enhancement.hpp"
#include "fusecond/error.hpp"
#include "fusecond/parallel.hpp"
#include "fusecond/tensor_io.hpp"

namespace fusecond {

PixelGrid load_pixels(const std::filesystem::path& path) {
    const Tensor t = load_tensor(path);
    require(t.dims.size() == 2 || t.dims.size() == 3, ErrorCategory::format,
            "pixels: expected an H x W or H x W x C tensor in " + path.string());
    PixelGrid grid(t.dims[0], t.dims[1], t.dims.size() == 3 ? t.dims[2] : 1);
    grid.values.assign(t.values.begin(), t.values.end());
    return grid;
}

void save_pixels(const std::filesystem::path& path, const PixelGrid& pixels) {
    Tensor t;
    t.dims = {pixels.height, pixels.width, pixels.channels};
    t.values.assign(pixels.values.begin(), pixels.values.end());
    save_tensor(path, t);
}

std::vector<std::size_t> score_histogram(const std::vector<double>& scores) {
    std::vector<std::size_t> bins(kHistogramBins, 0);
    for (double s : scores) {
        const double clamped = std::min(std::max(s, 0.0), 1.0);
        const auto bin = std::min<std::size_t>(kHistogramBins - 1,
                                               static_cast<std::size_t>(clamped * static_cast<double>(kHistogramBins)));
        ++bins[bin];
    }
    return bins;
}

std::string format_index_file(const std::vector<std::size_t>& indices, std::size_t universe) {
    std::ostringstream out;
    out << "INDEX " << universe << ' ' << indices.size() << '\n';
    for (std::size_t i = 0; i < indices.size(); ++i) out << (i ? " " : "") << indices[i];
    out << '\n';
    return out.str();
}

std::pair<std::vector<std::size_t>, std::size_t> parse_index_file(const std::string& text) {
    std::istringstream in(text);
    std::string tag;
    std::size_t universe = 0, count = 0;
    if (!(in >> tag >> universe >> count) || tag != "INDEX") fail(ErrorCategory::format, "index file: bad header");
    require(count <= universe, ErrorCategory::format, "index file: more indices than the universe holds");
    std::vector<std::size_t> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!(in >> out[i])) fail(ErrorCategory::format, "index file: truncated");
        require(out[i] < universe, ErrorCategory::format, "index file: index out of range");
        require(i == 0 || out[i - 1] < out[i], ErrorCategory::format, "index file: indices must increase");
    }
    std::string extra;
    require(!(in >> extra), ErrorCategory::format, "index file: trailing data");
    return {out, universe};
}

namespace {

using Clock = std::chrono::steady_clock;

template <typename Fn>
auto staged(RunArtifacts& run, const std::string& stage, Fn&& fn) {
    const auto start = Clock::now();
    auto record = [&] {
        run.timings.emplace_back(stage, std::chrono::duration<double>(Clock::now() - start).count());
    };
    try {
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            record();
        } else {
            auto out = fn();
            record();
            return out;
        }
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(stage, e);
    }
}

std::vector<std::size_t> patch_columns(const TokenLayout& layout, const TokenIndexSet& set) {
    std::vector<std::size_t> cols;
    cols.reserve(set.size());
    for (auto i : set.indices) cols.push_back(layout.patch_position(i));
    return cols;
}

double lambda_for(const PipelineConfig& cfg, SourceId id, std::size_t selected, std::size_t total) {
    if (auto it = cfg.lambda_overrides.find(id.name()); it != cfg.lambda_overrides.end()) return it->second;
    return default_lambda(selected, total, cfg.beta);
}

}  // namespace

RunArtifacts run_alignment(const PipelineConfig& config) {
    config.validate();
    RunArtifacts run;
    run.config = config;
    const std::size_t threads = resolve_threads(config.threads);
    const ToyEncoder encoder(config.encoder);
    const FlowModel model(config.flow);
    SamplerConfig capture_sampler = config.sampler;
    capture_sampler.noise_seed = config.alignment_noise_seed();

    staged(run, "init", [&] {
        const PixelGrid pixels = load_pixels(config.global_image);
        const ImageGeometry geom(pixels.height, pixels.width, config.patch_size);
        run.global.tokens = encoder.encode_image(pixels, geom);
        run.positions = model.init_voxels_from_global(run.global.tokens);
    });

    const std::size_t k_count = config.locals.size();
    run.locals.resize(k_count);
    staged(run, "local_align", [&] {
        // Images are independent; each worker only writes its own slot.
        const std::size_t outer = std::min(threads, k_count);
        const std::size_t inner = outer > 1 ? 1 : threads;
        parallel_for(k_count, outer, [&](std::size_t k) {
            LocalResult& local = run.locals[k];
            local.id = SourceId::local(k + 1);
            const PixelGrid pixels = load_pixels(config.locals[k].image);
            const RegionMask mask = load_mask(config.locals[k].mask);
            const ImageGeometry geom(pixels.height, pixels.width, config.patch_size);
            const TokenIndexSet full_selection = patch_indices(downsample_mask(mask, geom, config.mask_coverage));
            local.patch_total = geom.patch_count();
            if (config.mode == PipelineMode::no_mcfm_ablation) {
                const CroppedEncoding crop = encoder.encode_cropped(pixels, mask, geom);
                local.tokens = crop.sequence;
                for (auto i : full_selection.indices) {
                    if (auto j = crop.crop_patch_index(i)) local.selection.indices.push_back(*j);
                }
            } else {
                local.tokens = encoder.encode_image(pixels, geom);
                local.selection = full_selection;
            }
            const auto record = model.capture_attention(run.positions, local.tokens.tokens, capture_sampler, inner);
            const auto columns = patch_columns(local.tokens.layout, local.selection);
            local.forward = forward_align(record, columns, config.alignment, run.positions, inner);
            local.alignment_logits = summed_logits(record, local.forward.heads, config.alignment);
            local.lambda = lambda_for(config, local.id, full_selection.size(), local.patch_total);
        });
        for (const auto& local : run.locals) {
            if (local.forward.refined.empty()) {
                run.warnings.push_back(local.id.name() + ": no voxels aligned after refinement");
            }
        }
    });

    staged(run, "reverse_align", [&] {
        std::vector<VoxelSelection> aligned;
        for (const auto& local : run.locals) aligned.push_back(local.forward.refined);
        run.unaligned = unaligned_complement(aligned, run.positions.size());
        const auto record = model.capture_attention(run.positions, run.global.tokens.tokens, capture_sampler, threads);
        run.global.reverse = reverse_align(record, run.unaligned, run.global.tokens.layout, config.alignment);
        run.global.alignment_logits = summed_logits(record, run.global.reverse.heads, config.alignment);
        run.global.lambda = lambda_for(config, SourceId::global(), run.global.reverse.selected.size(),
                                       run.global.tokens.layout.patch_count);
    });
    return run;
}

RunArtifacts run_pipeline(const PipelineConfig& config) {
    RunArtifacts run = run_alignment(config);
    const std::size_t threads = resolve_threads(config.threads);
    const FlowModel model(config.flow);

    std::vector<ConditionSource> sources;
    for (const auto& local : run.locals) sources.push_back({local.id, local.tokens, local.selection});

    if (config.mode == PipelineMode::inpaint) {
        staged(run, "inpaint", [&] {
            run.unified = fuse_conditions(sources);
            run.initial = model.sample(run.positions, run.global.tokens.tokens, config.sampler, nullptr, threads).slat;
            run.final_slat = model.sample_inpaint(*run.initial, run.unified.matrix, run.unaligned, config.sampler, threads);
        });
        return run;
    }

    staged(run, "fuse", [&] {
        sources.push_back({SourceId::global(), run.global.tokens, run.global.reverse.selected});
        run.unified = fuse_conditions(sources);
    });
    staged(run, "enhance", [&] {
        std::vector<EnhancementSource> enh;
        for (const auto& local : run.locals) {
            enh.push_back({local.forward.refined, columns_of(run.unified, local.id), local.lambda});
        }
        enh.push_back({run.unaligned, columns_of(run.unified, SourceId::global()), run.global.lambda});
        run.enhancement = build_enhancement(enh, run.positions.size(), run.unified.token_count());
    });
    staged(run, "generate", [&] {
        run.final_slat = model.sample(run.positions, run.unified.matrix, config.sampler, &*run.enhancement, threads).slat;
    });
    return run;
}

std::string format_alignment_report(const RunArtifacts& run) {
    std::ostringstream out;
    out << "[alignment]\n";
    out << "voxels=" << run.positions.size() << '\n';
    out << "unaligned=" << run.unaligned.size() << '\n';
    for (const auto& local : run.locals) {
        out << "[source " << local.id.name() << "]\n";
        out << "selected_tokens=" << local.selection.size() << '\n';
        out << "voxels_before_refine=" << local.forward.raw.size() << '\n';
        out << "voxels_after_refine=" << local.forward.refined.size() << '\n';
        out << "heads=";
        for (std::size_t i = 0; i < local.forward.heads.size(); ++i) out << (i ? "," : "") << local.forward.heads[i];
        out << '\n';
        out << "score_histogram=";
        const auto hist = score_histogram(local.forward.scores);
        for (std::size_t i = 0; i < hist.size(); ++i) out << (i ? " " : "") << hist[i];
        out << '\n';
    }
    out << "[source global]\n";
    out << "selected_tokens=" << run.global.reverse.selected.size() << '\n';
    out << "score_histogram=";
    const auto hist = score_histogram(run.global.reverse.scores);
    for (std::size_t i = 0; i < hist.size(); ++i) out << (i ? " " : "") << hist[i];
    out << '\n';
    return out.str();
}

void write_artifacts(const RunArtifacts& run, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::size_t voxels = run.positions.size();
    write_file(dir / "manifest.txt", format_config(run.config, false));

    std::ostringstream timings;
    timings << "threads=" << resolve_threads(run.config.threads) << '\n';
    for (const auto& [stage, seconds] : run.timings) timings << stage << '=' << format_double(seconds) << '\n';
    write_file(dir / "timings.txt", timings.str());

    std::ostringstream sources;
    sources << "mode=" << to_string(run.config.mode) << '\n';
    sources << "voxels=" << voxels << '\n';
    sources << "registers=" << run.config.encoder.register_count << '\n';
    for (const auto& local : run.locals) {
        const std::string name = local.id.name();
        sources << "source " << name << " patch_total=" << local.patch_total << " selected=" << local.selection.size()
                << " lambda=" << format_double(local.lambda) << " voxels_raw=" << local.forward.raw.size()
                << " voxels_refined=" << local.forward.refined.size() << '\n';
        write_file(dir / (name + ".patches.idx"),
                   format_index_file(local.selection.indices, local.tokens.layout.patch_count));
        write_file(dir / (name + ".voxels_raw.idx"), format_index_file(local.forward.raw.indices, voxels));
        write_file(dir / (name + ".voxels.idx"), format_index_file(local.forward.refined.indices, voxels));
        save_tensor(dir / (name + ".scores.tensor"), to_tensor(local.forward.scores));
        save_tensor(dir / (name + ".logits.tensor"), to_tensor(local.alignment_logits));
    }
    sources << "source global patch_total=" << run.global.tokens.layout.patch_count
            << " selected=" << run.global.reverse.selected.size() << " lambda=" << format_double(run.global.lambda)
            << '\n';
    write_file(dir / "sources.txt", sources.str());
    write_file(dir / "global.patches.idx",
               format_index_file(run.global.reverse.selected.indices, run.global.tokens.layout.patch_count));
    save_tensor(dir / "global.scores.tensor", to_tensor(run.global.reverse.scores));
    save_tensor(dir / "global.logits.tensor", to_tensor(run.global.alignment_logits));
    write_file(dir / "unaligned.idx", format_index_file(run.unaligned.indices, voxels));
    std::ostringstream warnings;
    for (const auto& w : run.warnings) warnings << w << '\n';
    write_file(dir / "warnings.txt", warnings.str());

    if (!run.unified.matrix.empty()) {
        save_tensor(dir / "unified_tokens.tensor", to_tensor(run.unified.matrix));
        write_file(dir / "unified_tokens.provenance", format_provenance(run.unified));
    }
    if (run.enhancement) save_tensor(dir / "enhancement.tensor", to_tensor(*run.enhancement));
    if (run.initial) save_slat(dir / "initial.slat", *run.initial);
    if (run.final_slat) save_slat(dir / "final.slat", *run.final_slat);
    write_file(dir / "align_report.txt", format_alignment_report(run));
}

}  // namespace fusecond
