#include "fusecond/random.hpp"

#include <cmath>
#include <numbers>

namespace fusecond {

double SplitMix64::normal() noexcept {
    // 1 - uniform() lies in (0, 1], so the log is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return SplitMix64::mix(parent ^ h);
}

Matrix xavier_matrix(std::size_t fan_in, std::size_t fan_out, std::uint64_t seed) {
    SplitMix64 rng(seed);
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix m(fan_in, fan_out);
    for (double& v : m.data()) v = rng.symmetric(a);
    return m;
}

Matrix normal_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.normal();
    return m;
}

}  // namespace fusecond
