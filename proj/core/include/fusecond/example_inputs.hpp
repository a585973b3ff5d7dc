#pragma once

#include <cstdint>
#include <filesystem>

namespace fusecond {

struct ExampleOptions {
    std::size_t image_size = 112;  // square images, multiple of the patch size
    std::size_t channels = 3;
    std::size_t local_count = 2;
    std::uint64_t seed = 5;
};

// Writes a synthetic workspace into `dir`: a global image, `local_count` local
// images with region masks, and config.txt referencing them. Returns the
// config path.
std::filesystem::path write_example_inputs(const std::filesystem::path& dir, const ExampleOptions& options = {});

}  // namespace fusecond
