#include "doctest.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>

#include "fusecond/error.hpp"
#include "fusecond/example_inputs.hpp"
#include "fusecond/inspect.hpp"
#include "fusecond/parallel.hpp"
#include "fusecond/pipeline.hpp"
#include "fusecond/random.hpp"
#include "fusecond/tensor_io.hpp"

using namespace fusecond;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        SplitMix64 rng(static_cast<std::uint64_t>(std::hash<std::string>{}(tag)) ^
                       static_cast<std::uint64_t>(fs::file_time_type::clock::now().time_since_epoch().count()));
        path = fs::temp_directory_path() / ("fusecond_unit_" + tag + "_" + std::to_string(rng.next() % 1000000007));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

PipelineConfig small_config(const fs::path& dir, std::size_t locals = 2) {
    ExampleOptions opts;
    opts.local_count = locals;
    PipelineConfig cfg = load_config(write_example_inputs(dir, opts));
    cfg.sampler.step_count = 6;
    cfg.sampler.capture_step = 0;
    return cfg;
}

std::string slurp_all(const fs::path& dir) {
    std::string out;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        if (f.filename() == "timings.txt") continue;
        out += f.filename().string() + "\n" + read_file(f);
    }
    return out;
}

}  // namespace

TEST_CASE("runs are byte-identical and pass inspection") {
    TempDir tmp("repeat");
    PipelineConfig cfg = small_config(tmp.path / "in");
    const auto first = run_pipeline(cfg);
    write_artifacts(first, tmp.path / "a");
    cfg.threads = 3;
    write_artifacts(run_pipeline(cfg), tmp.path / "b");
    CHECK(slurp_all(tmp.path / "a") == slurp_all(tmp.path / "b"));
    CHECK(read_file(tmp.path / "b" / "timings.txt").rfind("threads=", 0) == 0);

    const InspectReport report = inspect(tmp.path / "a");
    for (const auto& c : report.checks) {
        INFO(c.name << ": " << c.detail);
        CHECK(c.passed);
    }
    CHECK(report.find("complement_law") != nullptr);
    CHECK(report.missing.empty());

    fs::remove(tmp.path / "a" / "unaligned.idx");
    const InspectReport broken = inspect(tmp.path / "a");
    CHECK_FALSE(broken.all_passed());
    CHECK_FALSE(broken.missing.empty());
}

TEST_CASE("unit lambda leaves the enhancement at one") {
    TempDir tmp("identity");
    PipelineConfig cfg = small_config(tmp.path / "in", 1);
    cfg.beta = 0.0;
    const auto run = run_pipeline(cfg);
    REQUIRE(run.enhancement);
    for (double v : run.enhancement->data()) CHECK(v == 1.0);
    write_artifacts(run, tmp.path / "out");
    const auto report = inspect(tmp.path / "out");
    CHECK(report.text.find("uniform_one=yes") != std::string::npos);
}

TEST_CASE("a whole-image mask scores every voxel fully") {
    TempDir tmp("fullmask");
    PipelineConfig cfg = small_config(tmp.path / "in", 1);
    const auto pixels = load_pixels(cfg.locals[0].image);
    save_mask(cfg.locals[0].mask, RegionMask(pixels.height, pixels.width, 1));
    cfg.alignment.refine = false;
    const auto run = run_alignment(cfg);
    REQUIRE(run.locals.size() == 1);
    CHECK(run.locals[0].selection.size() == run.locals[0].patch_total);
    const auto hist = score_histogram(run.locals[0].forward.scores);
    CHECK(hist.back() > 0);
    std::size_t below = 0;
    for (std::size_t b = 0; b + 1 < hist.size(); ++b) below += hist[b];
    CHECK(below < run.positions.size());
}

TEST_CASE("inpainting with nothing aligned") {
    TempDir tmp("inpaint");
    PipelineConfig cfg = small_config(tmp.path / "in", 1);
    cfg.mode = PipelineMode::inpaint;
    cfg.alignment.score_threshold = 1.0;
    cfg.alignment.refine = false;
    const auto run = run_pipeline(cfg);
    CHECK(run.unaligned.size() == run.positions.size());
    REQUIRE(run.initial);
    REQUIRE(run.final_slat);
    CHECK(run.final_slat->voxel_count() == run.positions.size());
}

TEST_CASE("stage errors carry the stage and category") {
    TempDir tmp("stage");
    PipelineConfig cfg = small_config(tmp.path / "in", 1);
    write_file(cfg.locals[0].mask, "MASK 2 2\n0 1\n");
    try {
        run_alignment(cfg);
        FAIL("expected an error");
    } catch (const StageError& e) {
        CHECK_FALSE(e.stage().empty());
        CHECK(e.category() == ErrorCategory::format);
    }
}

TEST_CASE("thread cap from the environment") {
    const char* saved = std::getenv("FUSECOND_THREADS");
    const std::string old = saved ? saved : "";
    ::setenv("FUSECOND_THREADS", "2", 1);
    CHECK(resolve_threads(8) == 2);
    CHECK(resolve_threads(1) == 1);
    ::setenv("FUSECOND_THREADS", "0", 1);
    CHECK(resolve_threads(4) >= 1);
    ::unsetenv("FUSECOND_THREADS");
    CHECK(resolve_threads(4) == 4);
    CHECK(resolve_threads(0) == 1);
    if (saved) ::setenv("FUSECOND_THREADS", old.c_str(), 1);
}
