#include "fusecond/example_inputs.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "fusecond/error.hpp"
#include "fusecond/patch_grid.hpp"
#include "fusecond/pipeline.hpp"
#include "fusecond/random.hpp"
#include "fusecond/tensor_io.hpp"

namespace fusecond {

namespace {

PixelGrid make_image(std::size_t size, std::size_t channels, std::uint64_t seed, double frequency) {
    SplitMix64 rng(seed);
    std::vector<double> phase(channels);
    for (auto& p : phase) p = rng.uniform() * 2.0 * std::numbers::pi;
    PixelGrid img(size, size, channels);
    const double s = static_cast<double>(size);
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            for (std::size_t c = 0; c < channels; ++c) {
                const double u = static_cast<double>(x) / s;
                const double v = static_cast<double>(y) / s;
                const double wave = std::sin(frequency * (u + 0.5 * v) * 2.0 * std::numbers::pi + phase[c]);
                img.at(y, x, c) = 0.5 + 0.4 * wave + 0.1 * (rng.uniform() - 0.5);
            }
        }
    }
    return img;
}

// Local k gets a rectangle for odd k and a disk for even k, placed at
// different corners so regions overlap only partially.
RegionMask make_mask(std::size_t size, std::size_t k) {
    RegionMask mask(size, size);
    const double s = static_cast<double>(size);
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            const double u = static_cast<double>(x) / s;
            const double v = static_cast<double>(y) / s;
            bool on = false;
            if (k % 2 == 1) {
                const double shift = 0.1 * static_cast<double>((k - 1) / 2);
                on = u >= 0.05 + shift && u < 0.55 + shift && v >= 0.1 && v < 0.6;
            } else {
                const double cx = 0.68 - 0.1 * static_cast<double>(k / 2 - 1);
                on = (u - cx) * (u - cx) + (v - 0.65) * (v - 0.65) < 0.28 * 0.28;
            }
            mask.set(y, x, on);
        }
    }
    return mask;
}

}  // namespace

std::filesystem::path write_example_inputs(const std::filesystem::path& dir, const ExampleOptions& options) {
    require(options.local_count >= 1, ErrorCategory::config, "example: need at least one local image");
    std::filesystem::create_directories(dir);
    std::ostringstream cfg;
    cfg << "# synthetic example workspace\n";
    cfg << "seed=" << options.seed << "\n";
    save_pixels(dir / "global.tensor",
                make_image(options.image_size, options.channels, derive_seed(options.seed, "global"), 1.0));
    cfg << "global.image=global.tensor\n";
    for (std::size_t k = 1; k <= options.local_count; ++k) {
        const std::string name = "local" + std::to_string(k);
        save_pixels(dir / (name + ".tensor"),
                    make_image(options.image_size, options.channels, derive_seed(options.seed, name),
                               2.0 + static_cast<double>(k)));
        save_mask(dir / (name + ".mask"), make_mask(options.image_size, k));
        cfg << name << ".image=" << name << ".tensor\n";
        cfg << name << ".mask=" << name << ".mask\n";
    }
    const auto path = dir / "config.txt";
    write_file(path, cfg.str());
    return path;
}

}  // namespace fusecond
