#include "fusecond/tensor_io.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include "binary_io.hpp"
#include "fusecond/error.hpp"

namespace fusecond {

namespace {

constexpr std::string_view kMagic = "FUS3";

std::uint64_t checked_product(const std::vector<std::uint64_t>& dims) {
    std::uint64_t count = 1;
    for (auto d : dims) {
        if (d == 0) fail(ErrorCategory::format, "tensor: zero-length dimension");
        if (count > std::numeric_limits<std::uint64_t>::max() / d / sizeof(float)) {
            fail(ErrorCategory::format, "tensor: dimension overflow");
        }
        count *= d;
    }
    return count;
}

}  // namespace

std::uint64_t Tensor::element_count() const { return checked_product(dims); }

std::string encode_tensor(const Tensor& tensor) {
    require(!tensor.dims.empty() && tensor.dims.size() <= kTensorMaxRank, ErrorCategory::format,
            "tensor: rank must be in [1, 4]");
    require(tensor.element_count() == tensor.values.size(), ErrorCategory::format,
            "tensor: value count does not match dims");
    detail::ByteWriter w;
    w.raw(kMagic);
    w.uint<std::uint32_t>(kTensorVersion);
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(tensor.dims.size()));
    for (auto d : tensor.dims) w.uint<std::uint64_t>(d);
    for (float v : tensor.values) w.f32(v);
    return w.take();
}

Tensor decode_tensor(const std::string& bytes) {
    detail::ByteReader r(bytes, "tensor");
    if (r.raw(kMagic.size()) != kMagic) fail(ErrorCategory::format, "tensor: bad magic");
    const auto version = r.uint<std::uint32_t>();
    if (version != kTensorVersion) {
        fail(ErrorCategory::format, "tensor: unsupported version " + std::to_string(version));
    }
    const auto rank = r.uint<std::uint32_t>();
    if (rank == 0 || rank > kTensorMaxRank) {
        fail(ErrorCategory::format, "tensor: rank must be in [1, 4], got " + std::to_string(rank));
    }
    Tensor t;
    t.dims.resize(rank);
    for (auto& d : t.dims) d = r.uint<std::uint64_t>();
    const std::uint64_t count = checked_product(t.dims);
    if (r.remaining() != count * sizeof(float)) {
        fail(ErrorCategory::format, r.remaining() < count * sizeof(float)
                                        ? "tensor: truncated payload"
                                        : "tensor: trailing bytes after payload");
    }
    t.values.resize(count);
    for (auto& v : t.values) v = r.f32();
    return t;
}

void save_tensor(const std::filesystem::path& path, const Tensor& tensor) {
    write_file(path, encode_tensor(tensor));
}

Tensor load_tensor(const std::filesystem::path& path) { return decode_tensor(read_file(path)); }

Tensor to_tensor(const Matrix& m) {
    Tensor t;
    t.dims = {m.rows(), m.cols()};
    t.values.reserve(m.size());
    for (double v : m.data()) t.values.push_back(static_cast<float>(v));
    return t;
}

Tensor to_tensor(const std::vector<double>& v) {
    Tensor t;
    t.dims = {v.size()};
    t.values.assign(v.begin(), v.end());
    return t;
}

Matrix to_matrix(const Tensor& t) {
    require(t.dims.size() == 2, ErrorCategory::format, "tensor: expected rank 2");
    Matrix m(t.dims[0], t.dims[1]);
    for (std::size_t i = 0; i < t.values.size(); ++i) m.data()[i] = t.values[i];
    return m;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::format, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCategory::format, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCategory::format, "write failed for " + path.string());
}

}  // namespace fusecond
