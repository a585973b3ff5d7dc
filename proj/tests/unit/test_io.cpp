#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <functional>

#include "fusecond/config.hpp"
#include "fusecond/error.hpp"
#include "fusecond/pipeline.hpp"
#include "fusecond/random.hpp"
#include "fusecond/tensor_io.hpp"

using namespace fusecond;

namespace {

std::string header(std::uint32_t version, std::uint32_t rank, const std::vector<std::uint64_t>& dims) {
    std::string out = "FUS3";
    auto put = [&](const void* p, std::size_t n) { out.append(static_cast<const char*>(p), n); };
    put(&version, 4);
    put(&rank, 4);
    for (auto d : dims) put(&d, 8);
    return out;
}

ErrorCategory category_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.category();
    }
    FAIL("expected an error");
    return ErrorCategory::numeric;
}

}  // namespace

TEST_CASE("tensor round trip") {
    Tensor t;
    t.dims = {3, 4, 5};
    for (int i = 0; i < 60; ++i) t.values.push_back(static_cast<float>(i) * 0.25f - 3.0f);
    const std::string bytes = encode_tensor(t);
    CHECK(bytes.size() == 12 + 3 * 8 + 60 * 4);
    CHECK(bytes.substr(0, 4) == "FUS3");
    CHECK(decode_tensor(bytes) == t);

    const auto path = std::filesystem::temp_directory_path() / "fusecond_unit_tensor.tensor";
    save_tensor(path, t);
    CHECK(load_tensor(path) == t);
    std::filesystem::remove(path);
}

TEST_CASE("tensor header validation") {
    Tensor t{{2, 2}, {1, 2, 3, 4}};
    const std::string good = encode_tensor(t);
    std::string bad_magic = good;
    bad_magic[0] = 'X';
    CHECK(category_of([&] { decode_tensor(bad_magic); }) == ErrorCategory::format);
    CHECK(category_of([&] { decode_tensor(good.substr(0, good.size() - 1)); }) == ErrorCategory::format);
    CHECK(category_of([&] { decode_tensor(good + "x"); }) == ErrorCategory::format);
    CHECK(category_of([&] { decode_tensor(header(1, 0, {})); }) == ErrorCategory::format);
    CHECK(category_of([&] { decode_tensor(header(1, 5, {1, 1, 1, 1, 1}) + std::string(4, '\0')); }) ==
          ErrorCategory::format);
    CHECK(category_of([&] { decode_tensor(header(2, 1, {1}) + std::string(4, '\0')); }) == ErrorCategory::format);
    CHECK(category_of([&] { decode_tensor("FU"); }) == ErrorCategory::format);
    CHECK(category_of([&] { encode_tensor(Tensor{{2, 3}, {1, 2}}); }) != ErrorCategory::numeric);
}

TEST_CASE("matrix conversion narrows to float") {
    Matrix m(2, 3);
    for (std::size_t i = 0; i < 6; ++i) m.data()[i] = 0.1 * static_cast<double>(i);
    const Tensor t = to_tensor(m);
    CHECK(t.dims == std::vector<std::uint64_t>{2, 3});
    const Matrix back = to_matrix(t);
    for (std::size_t i = 0; i < 6; ++i) CHECK(back.data()[i] == static_cast<double>(static_cast<float>(m.data()[i])));
    CHECK(to_tensor(std::vector<double>{1.0, 2.0}).dims == std::vector<std::uint64_t>{2});
}

TEST_CASE("config parsing") {
    const std::string text =
        "# example\n"
        "seed = 42\n"
        "mode=inpaint\n"
        "global.image=g.pix\n"
        "local1.image=a.pix\n"
        "local1.mask=a.mask\n"
        "local2.image=b.pix\n"
        "local2.mask=b.mask\n"
        "alignment.threshold=0.7\n"
        "alignment.heads=0,2\n"
        "refine.enabled=false\n"
        "lambda.local2=2.5\n"
        "flow.enhanced_blocks=1\n";
    const PipelineConfig cfg = parse_config(text, "/data");
    CHECK(cfg.seed == 42);
    CHECK(cfg.mode == PipelineMode::inpaint);
    CHECK(cfg.global_image == std::filesystem::path("/data/g.pix"));
    REQUIRE(cfg.locals.size() == 2);
    CHECK(cfg.locals[1].mask == std::filesystem::path("/data/b.mask"));
    CHECK(cfg.alignment.score_threshold == 0.7);
    CHECK(cfg.alignment.heads == std::vector<std::size_t>{0, 2});
    CHECK_FALSE(cfg.alignment.refine);
    CHECK(cfg.lambda_overrides.at("local2") == 2.5);
    CHECK(cfg.flow.enhanced_blocks == std::vector<std::size_t>{1});
    CHECK(cfg.encoder.seed == derive_seed(42, "encoder"));

    const std::string formatted = format_config(cfg);
    const PipelineConfig again = parse_config(formatted);
    CHECK(format_config(again) == formatted);
    CHECK(format_config(cfg, false).find("threads=") == std::string::npos);
    CHECK(formatted.find("threads=") != std::string::npos);
}

TEST_CASE("config defaults survive a round trip") {
    PipelineConfig cfg;
    cfg.global_image = "g";
    cfg.locals.push_back({"a", "b"});
    cfg.resolve_seeds();
    const std::string text = format_config(cfg);
    CHECK(format_config(parse_config(text)) == text);
}

TEST_CASE("config rejections") {
    auto cat = [](const std::string& text) { return category_of([&] { parse_config(text); }); };
    CHECK(cat("bogus=1\n") == ErrorCategory::config);
    CHECK(cat("seed\n") == ErrorCategory::config);
    CHECK(cat("local1.image=a\nlocal1.mask=b\nlocal3.image=c\nlocal3.mask=d\n") == ErrorCategory::config);
    CHECK(cat("local1.image=a\n") == ErrorCategory::config);
    CHECK(cat("local0.image=a\n") == ErrorCategory::config);
    CHECK(cat("seed=abc\n") == ErrorCategory::config);
    CHECK(cat("seed=-1\n") == ErrorCategory::config);
    CHECK(cat("refine.enabled=maybe\n") == ErrorCategory::config);
    CHECK(cat("mode=other\n") == ErrorCategory::config);
    CHECK(cat("alignment.threshold=0.5x\n") == ErrorCategory::config);

    PipelineConfig cfg = parse_config("global.image=/nonexistent/g\nlocal1.image=/x\nlocal1.mask=/y\n");
    CHECK(category_of([&] { cfg.validate(); }) == ErrorCategory::config);
    CHECK(category_of([&] { PipelineConfig{}.validate(); }) == ErrorCategory::config);
}

TEST_CASE("index files") {
    CHECK(format_index_file({1, 4, 7}, 10) == "INDEX 10 3\n1 4 7\n");
    const auto [indices, universe] = parse_index_file("INDEX 10 3\n1 4 7\n");
    CHECK(indices == std::vector<std::size_t>{1, 4, 7});
    CHECK(universe == 10);
    CHECK(parse_index_file(format_index_file({}, 5)).first.empty());
    CHECK_THROWS_AS(parse_index_file("INDEX 10 2\n1 4 7\n"), Error);
    CHECK_THROWS_AS(parse_index_file("INDEX 10 2\n4 1\n"), Error);
    CHECK_THROWS_AS(parse_index_file("INDEX 3 1\n3\n"), Error);
    CHECK_THROWS_AS(parse_index_file("IDX 3 1\n0\n"), Error);
}

TEST_CASE("score histogram") {
    const auto h = score_histogram({0.0, 0.05, 0.999, 1.0, 0.5});
    REQUIRE(h.size() == kHistogramBins);
    CHECK(h[0] == 2);
    CHECK(h[15] == 2);
    CHECK(h[8] == 1);
    CHECK(h[1] == 0);
    std::size_t total = 0;
    for (auto c : h) total += c;
    CHECK(total == 5);
}
