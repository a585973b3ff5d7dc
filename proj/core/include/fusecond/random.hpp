#pragma once

#include <cstdint>
#include <string_view>

#include "fusecond/matrix.hpp"

namespace fusecond {

// SplitMix64: the state advances by the golden-ratio increment and each output
// is a bijective mix of the state. Portable and bit-reproducible.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    // Uniform in [0, 1) with 53 bits of resolution.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [-a, a).
    double symmetric(double a) noexcept { return (2.0 * uniform() - 1.0) * a; }

    // Standard normal via Box-Muller; one draw consumes two outputs.
    double normal() noexcept;

    static std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

// Hash-split of a parent seed by a stage label: mix(parent ^ fnv1a(label)).
// Stages derive their streams independently, so adding a stage never shifts
// the randomness seen by another.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) noexcept;

// Xavier-uniform weight matrix (fan_in x fan_out), entries in [-a, a] with
// a = sqrt(6 / (fan_in + fan_out)).
Matrix xavier_matrix(std::size_t fan_in, std::size_t fan_out, std::uint64_t seed);

Matrix normal_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed);

}  // namespace fusecond
