#include "fusecond/embedding.hpp"

#include <cmath>

namespace fusecond {

void fill_sinusoid(std::span<double> dst, double position) {
    const std::size_t n = dst.size();
    for (std::size_t j = 0; j < n; ++j) {
        const double pair = static_cast<double>(j / 2);
        const double freq = std::pow(10000.0, -2.0 * pair / static_cast<double>(n));
        dst[j] = (j % 2 == 0) ? std::sin(position * freq) : std::cos(position * freq);
    }
}

Matrix sinusoidal_position_2d(std::size_t rows, std::size_t cols, std::size_t dim) {
    Matrix out(rows * cols, dim);
    const std::size_t half = dim / 2;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            auto row = out.row(r * cols + c);
            fill_sinusoid(row.subspan(0, half), static_cast<double>(r));
            fill_sinusoid(row.subspan(half), static_cast<double>(c));
        }
    }
    return out;
}

Matrix sinusoidal_position_3d(const std::vector<VoxelCoord>& positions, std::size_t dim) {
    Matrix out(positions.size(), dim);
    const std::size_t third = dim / 3;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        auto row = out.row(i);
        fill_sinusoid(row.subspan(0, third), positions[i].x);
        fill_sinusoid(row.subspan(third, third), positions[i].y);
        fill_sinusoid(row.subspan(2 * third), positions[i].z);
    }
    return out;
}

std::vector<double> timestep_embedding(double t, std::size_t dim) {
    std::vector<double> out(dim);
    fill_sinusoid(out, 1000.0 * t);
    return out;
}

}  // namespace fusecond
