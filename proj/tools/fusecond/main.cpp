#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fusecond/config.hpp"
#include "fusecond/error.hpp"
#include "fusecond/example_inputs.hpp"
#include "fusecond/fusion.hpp"
#include "fusecond/inspect.hpp"
#include "fusecond/pipeline.hpp"
#include "fusecond_checks/acceptance.hpp"

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

struct RunOptions {
    std::string config;
    std::string out;
    std::string mode;
    std::vector<std::string> lambdas;
    std::optional<std::uint64_t> seed;
    std::optional<double> beta;
    std::optional<std::size_t> threads;
};

fusecond::PipelineConfig resolve(const RunOptions& opts) {
    using namespace fusecond;
    PipelineConfig cfg = load_config(opts.config);
    if (opts.seed) {
        cfg.seed = *opts.seed;
        cfg.resolve_seeds();
    }
    if (!opts.mode.empty()) cfg.mode = parse_mode(opts.mode);
    if (opts.beta) cfg.beta = *opts.beta;
    if (opts.threads) cfg.threads = *opts.threads;
    for (const auto& item : opts.lambdas) {
        const auto eq = item.find('=');
        require(eq != std::string::npos, ErrorCategory::config, "--lambda expects <source>=<value>, got " + item);
        const std::string source = SourceId::parse(item.substr(0, eq)).name();
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(item.substr(eq + 1), &used);
        } catch (const std::exception&) {
            used = 0;
        }
        require(used > 0 && used == item.size() - eq - 1, ErrorCategory::config, "--lambda: invalid value in " + item);
        cfg.lambda_overrides[source] = value;
    }
    cfg.validate();
    return cfg;
}

void report(const fusecond::RunArtifacts& run, const std::string& out) {
    for (const auto& w : run.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "voxels=" << run.positions.size() << " unaligned=" << run.unaligned.size();
    for (const auto& local : run.locals) {
        std::cout << ' ' << local.id.name() << '=' << local.forward.refined.size();
    }
    std::cout << " global_tokens=" << run.global.reverse.selected.size() << '\n';
    std::cout << "artifacts written to " << out << '\n';
}

void add_run_options(CLI::App* cmd, RunOptions& opts) {
    cmd->add_option("--config", opts.config, "Pipeline configuration file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out, "Output directory for artifacts")->required();
    cmd->add_option("--seed", opts.seed, "Override the master seed");
    cmd->add_option("--threads", opts.threads, "Parallelism degree (capped by FUSECOND_THREADS)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fusecond: multi-image conditioned sparse voxel generation"};
    app.require_subcommand(1);

    RunOptions gen_opts;
    auto* generate = app.add_subcommand("generate", "Run the full pipeline and write all artifacts");
    add_run_options(generate, gen_opts);
    generate->add_option("--mode", gen_opts.mode, "full, inpaint or no_mcfm_ablation")
        ->check(CLI::IsMember({"full", "inpaint", "no_mcfm_ablation"}));
    generate->add_option("--lambda", gen_opts.lambdas, "Enhancement override, e.g. local1=2.5 (repeatable)");
    generate->add_option("--beta", gen_opts.beta, "Scale of the default lambda rule");

    RunOptions align_opts;
    auto* align = app.add_subcommand("align", "Run the alignment stages only");
    add_run_options(align, align_opts);

    std::string inspect_dir;
    auto* inspect = app.add_subcommand("inspect", "Summarize and check an artifacts directory");
    inspect->add_option("dir", inspect_dir, "Artifacts directory")->required()->check(CLI::ExistingDirectory);

    int criterion = 0;
    std::string scratch;
    bool keep = false;
    auto* selftest = app.add_subcommand("selftest", "Run the oracle-equivalence and acceptance suite");
    selftest->add_option("--criterion", criterion, "Run a single criterion (1-10)")->check(CLI::Range(1, 10));
    selftest->add_option("--scratch", scratch, "Working directory for pipeline runs");
    selftest->add_flag("--keep", keep, "Keep the working directory");

    std::string example_dir;
    fusecond::ExampleOptions example;
    auto* make_example = app.add_subcommand("make-example", "Write a synthetic input workspace");
    make_example->add_option("dir", example_dir, "Target directory")->required();
    make_example->add_option("--seed", example.seed, "Seed for the synthetic images");
    make_example->add_option("--locals", example.local_count, "Number of local images")->check(CLI::Range(1, 16));
    make_example->add_option("--size", example.image_size, "Image side in pixels (multiple of 14)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*generate) {
            const auto cfg = resolve(gen_opts);
            const auto run = fusecond::run_pipeline(cfg);
            fusecond::write_artifacts(run, gen_opts.out);
            report(run, gen_opts.out);
        } else if (*align) {
            const auto cfg = resolve(align_opts);
            const auto run = fusecond::run_alignment(cfg);
            fusecond::write_artifacts(run, align_opts.out);
            report(run, align_opts.out);
        } else if (*inspect) {
            const auto result = fusecond::inspect(inspect_dir);
            std::cout << result.text;
            if (!result.all_passed()) {
                std::cerr << "inspect: invariant checks failed\n";
                return kExitCheckFailed;
            }
        } else if (*selftest) {
            fusecond::checks::AcceptanceOptions options;
            options.scratch = scratch;
            options.keep_scratch = keep;
            std::size_t failed = 0;
            auto print = [&](const fusecond::checks::CriterionResult& r) {
                std::cout << fusecond::checks::format_result(r) << std::endl;
                if (!r.passed) ++failed;
            };
            if (criterion > 0) print(fusecond::checks::run_criterion(criterion, options));
            else fusecond::checks::run_acceptance(options, print);
            if (failed > 0) return kExitCheckFailed;
        } else if (*make_example) {
            const auto path = fusecond::write_example_inputs(example_dir, example);
            std::cout << path.string() << '\n';
        }
    } catch (const fusecond::Error& e) {
        std::cerr << "error (" << fusecond::to_string(e.category()) << "): " << e.what() << '\n';
        return e.is_numeric() ? kExitNumeric : kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return EXIT_SUCCESS;
}
