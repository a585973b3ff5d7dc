#include "fusecond/patch_grid.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <string_view>

#include "fusecond/error.hpp"
#include "fusecond/tensor_io.hpp"

namespace fusecond {

ImageGeometry::ImageGeometry(std::size_t height_px, std::size_t width_px, std::size_t patch_size_px)
    : height_(height_px), width_(width_px), patch_(patch_size_px) {
    require(patch_ > 0, ErrorCategory::geometry, "patch size must be positive");
    require(height_ > 0 && width_ > 0, ErrorCategory::geometry, "image dimensions must be positive");
    require(height_ % patch_ == 0 && width_ % patch_ == 0, ErrorCategory::geometry,
            "image " + std::to_string(height_) + "x" + std::to_string(width_) +
                " is not a multiple of patch size " + std::to_string(patch_));
}

std::size_t BinaryGrid::count() const {
    return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

PatchMask downsample_mask(const RegionMask& mask, const ImageGeometry& geom, double coverage_threshold) {
    require(mask.rows == geom.height_px() && mask.cols == geom.width_px(), ErrorCategory::geometry,
            "mask is " + std::to_string(mask.rows) + "x" + std::to_string(mask.cols) + ", image is " +
                std::to_string(geom.height_px()) + "x" + std::to_string(geom.width_px()));
    require(coverage_threshold >= 0.0 && coverage_threshold <= 1.0, ErrorCategory::parameter,
            "coverage threshold must lie in [0, 1]");
    const std::size_t p = geom.patch_size_px();
    const double needed = coverage_threshold * static_cast<double>(p * p);
    PatchMask out(geom.patch_rows(), geom.patch_cols());
    for (std::size_t pr = 0; pr < out.rows; ++pr) {
        for (std::size_t pc = 0; pc < out.cols; ++pc) {
            std::size_t set = 0;
            for (std::size_t y = pr * p; y < (pr + 1) * p; ++y) {
                for (std::size_t x = pc * p; x < (pc + 1) * p; ++x) set += mask.at(y, x);
            }
            out.set(pr, pc, set > 0 && static_cast<double>(set) >= needed);
        }
    }
    return out;
}

TokenIndexSet patch_indices(const PatchMask& pmask) {
    TokenIndexSet out;
    for (std::size_t i = 0; i < pmask.cells.size(); ++i) {
        if (pmask.cells[i] != 0) out.indices.push_back(i);
    }
    return out;
}

PatchMask indicator_mask(const TokenIndexSet& set, std::size_t rows, std::size_t cols) {
    validate(set, rows * cols);
    PatchMask out(rows, cols);
    for (auto i : set.indices) out.cells[i] = 1;
    return out;
}

TokenLayout token_layout(const ImageGeometry& geom, std::size_t register_count) {
    return TokenLayout{register_count, geom.patch_count()};
}

void validate(const TokenIndexSet& set, std::size_t patch_count) {
    for (std::size_t k = 0; k < set.indices.size(); ++k) {
        require(set.indices[k] < patch_count, ErrorCategory::parameter,
                "token index " + std::to_string(set.indices[k]) + " out of range");
        require(k == 0 || set.indices[k - 1] < set.indices[k], ErrorCategory::parameter,
                "token indices must be strictly increasing");
    }
}

namespace {

std::size_t parse_extent(std::string_view token) {
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || value == 0) {
        fail(ErrorCategory::format, "mask: invalid dimension '" + std::string(token) + "'");
    }
    return value;
}

std::vector<std::string_view> split_spaces(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        if (line[i] == ' ') {
            ++i;
            continue;
        }
        const std::size_t j = line.find(' ', i);
        const std::size_t end = j == std::string_view::npos ? line.size() : j;
        out.push_back(line.substr(i, end - i));
        i = end;
    }
    return out;
}

}  // namespace

RegionMask parse_mask(const std::string& text) {
    std::vector<std::string_view> lines;
    std::string_view rest(text);
    while (!rest.empty()) {
        const std::size_t nl = rest.find('\n');
        lines.push_back(rest.substr(0, nl));
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    }
    for (auto& line : lines) {
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    }
    if (lines.empty()) fail(ErrorCategory::format, "mask: empty input");

    const auto header = split_spaces(lines[0]);
    if (header.size() != 3 || header[0] != "MASK") {
        fail(ErrorCategory::format, "mask: header must be 'MASK <rows> <cols>'");
    }
    const std::size_t rows = parse_extent(header[1]);
    const std::size_t cols = parse_extent(header[2]);
    if (lines.size() < rows + 1) fail(ErrorCategory::format, "mask: missing rows");
    for (std::size_t i = rows + 1; i < lines.size(); ++i) {
        if (!lines[i].empty()) fail(ErrorCategory::format, "mask: unexpected content after last row");
    }

    RegionMask mask(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto tokens = split_spaces(lines[r + 1]);
        if (tokens.size() != cols) {
            fail(ErrorCategory::format, "mask: row " + std::to_string(r) + " has " +
                                            std::to_string(tokens.size()) + " entries, expected " +
                                            std::to_string(cols));
        }
        for (std::size_t c = 0; c < cols; ++c) {
            if (tokens[c] == "1") {
                mask.set(r, c, true);
            } else if (tokens[c] != "0") {
                fail(ErrorCategory::format, "mask: invalid token '" + std::string(tokens[c]) + "'");
            }
        }
    }
    return mask;
}

std::string format_mask(const BinaryGrid& mask) {
    std::string out = "MASK " + std::to_string(mask.rows) + " " + std::to_string(mask.cols) + "\n";
    out.reserve(out.size() + mask.rows * mask.cols * 2);
    for (std::size_t r = 0; r < mask.rows; ++r) {
        for (std::size_t c = 0; c < mask.cols; ++c) {
            if (c > 0) out.push_back(' ');
            out.push_back(mask.at(r, c) ? '1' : '0');
        }
        out.push_back('\n');
    }
    return out;
}

RegionMask load_mask(const std::filesystem::path& path) { return parse_mask(read_file(path)); }

void save_mask(const std::filesystem::path& path, const BinaryGrid& mask) {
    write_file(path, format_mask(mask));
}

}  // namespace fusecond
