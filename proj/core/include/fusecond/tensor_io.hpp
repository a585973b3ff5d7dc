#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fusecond/matrix.hpp"

namespace fusecond {

// On-disk tensor: magic "FUS3", u32 version = 1, u32 ndim in [1, 4],
// ndim x u64 dims, then a row-major little-endian float32 payload.
// The file length must match the header exactly.
struct Tensor {
    std::vector<std::uint64_t> dims;
    std::vector<float> values;

    std::uint64_t element_count() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

inline constexpr std::uint32_t kTensorVersion = 1;
inline constexpr std::uint32_t kTensorMaxRank = 4;

std::string encode_tensor(const Tensor& tensor);
Tensor decode_tensor(const std::string& bytes);

void save_tensor(const std::filesystem::path& path, const Tensor& tensor);
Tensor load_tensor(const std::filesystem::path& path);

// Matrix <-> rank-2 tensor. Values are narrowed to float32 on the way out.
Tensor to_tensor(const Matrix& m);
Matrix to_matrix(const Tensor& t);
Tensor to_tensor(const std::vector<double>& v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace fusecond
