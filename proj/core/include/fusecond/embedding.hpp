#pragma once

#include <span>
#include <vector>

#include "fusecond/matrix.hpp"
#include "fusecond/sparse_voxel.hpp"

namespace fusecond {

// dst[2j] = sin(position * w_j), dst[2j+1] = cos(position * w_j) with
// w_j = 10000^(-2j / dst.size()).
void fill_sinusoid(std::span<double> dst, double position);

// (rows * cols) x dim; first half of the channels encode the row, second half
// the column.
Matrix sinusoidal_position_2d(std::size_t rows, std::size_t cols, std::size_t dim);

// L x dim; channels split into three groups for x, y and z.
Matrix sinusoidal_position_3d(const std::vector<VoxelCoord>& positions, std::size_t dim);

// Sinusoid of 1000 * t over dim channels.
std::vector<double> timestep_embedding(double t, std::size_t dim);

}  // namespace fusecond
