#include "fusecond/sparse_voxel.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <utility>

#include "binary_io.hpp"
#include "fusecond/error.hpp"
#include "fusecond/parallel.hpp"
#include "fusecond/tensor_io.hpp"

namespace fusecond {

std::uint64_t squared_distance(const VoxelCoord& a, const VoxelCoord& b) noexcept {
    auto d = [](std::uint32_t u, std::uint32_t v) {
        const std::int64_t diff = static_cast<std::int64_t>(u) - static_cast<std::int64_t>(v);
        return static_cast<std::uint64_t>(diff * diff);
    };
    return d(a.x, b.x) + d(a.y, b.y) + d(a.z, b.z);
}

void SparseVoxelLatent::validate() const {
    require(grid_size > 0, ErrorCategory::format, "slat: grid size must be positive");
    require(latents.rows() == positions.size(), ErrorCategory::format, "slat: latent row count mismatch");
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const auto& p = positions[i];
        require(p.x < grid_size && p.y < grid_size && p.z < grid_size, ErrorCategory::format,
                "slat: position outside grid");
        require(i == 0 || positions[i - 1] < p, ErrorCategory::format,
                "slat: positions must be strictly lexicographically increasing");
    }
    require(latents.all_finite(), ErrorCategory::numeric, "slat: non-finite latent");
}

void validate(const VoxelSelection& sel, std::size_t voxel_count) {
    for (std::size_t k = 0; k < sel.indices.size(); ++k) {
        require(sel.indices[k] < voxel_count, ErrorCategory::parameter,
                "voxel index " + std::to_string(sel.indices[k]) + " out of range");
        require(k == 0 || sel.indices[k - 1] < sel.indices[k], ErrorCategory::parameter,
                "voxel selection must be strictly increasing");
    }
}

std::vector<VoxelCoord> grid_to_positions(const DenseBinaryGrid& grid) {
    std::vector<VoxelCoord> out;
    const std::uint32_t n = grid.size;
    for (std::uint32_t x = 0; x < n; ++x) {
        for (std::uint32_t y = 0; y < n; ++y) {
            for (std::uint32_t z = 0; z < n; ++z) {
                if (grid.at(x, y, z) != 0) out.push_back({x, y, z});
            }
        }
    }
    require(!out.empty(), ErrorCategory::empty_structure, "structure grid has no active voxels");
    return out;
}

namespace {

// Coordinate -> voxel index lookup, dense when the bounding cube is small.
class VoxelLookup {
public:
    explicit VoxelLookup(const std::vector<VoxelCoord>& positions) {
        for (const auto& p : positions) extent_ = std::max({extent_, p.x + 1, p.y + 1, p.z + 1});
        const std::uint64_t cube = std::uint64_t{extent_} * extent_ * extent_;
        dense_ = cube <= (std::uint64_t{1} << 22);
        if (dense_) {
            table_.assign(cube, kNone);
        } else {
            sparse_.reserve(positions.size());
        }
        for (std::size_t i = 0; i < positions.size(); ++i) {
            const auto key = pack(positions[i].x, positions[i].y, positions[i].z);
            if (dense_) {
                table_[key] = i;
            } else {
                sparse_.emplace(key, i);
            }
        }
    }

    std::int64_t extent() const noexcept { return extent_; }

    std::size_t find(std::int64_t x, std::int64_t y, std::int64_t z) const {
        if (x < 0 || y < 0 || z < 0 || x >= extent_ || y >= extent_ || z >= extent_) return kNone;
        const auto key = pack(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y),
                              static_cast<std::uint32_t>(z));
        if (dense_) return table_[key];
        auto it = sparse_.find(key);
        return it == sparse_.end() ? kNone : it->second;
    }

    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

private:
    std::uint64_t pack(std::uint32_t x, std::uint32_t y, std::uint32_t z) const noexcept {
        return (std::uint64_t{x} * extent_ + y) * extent_ + z;
    }

    std::uint32_t extent_ = 0;
    bool dense_ = true;
    std::vector<std::size_t> table_;
    std::unordered_map<std::uint64_t, std::size_t> sparse_;
};

using Candidate = std::pair<std::uint64_t, std::size_t>;  // (squared distance, index)

// Expands Chebyshev shells around voxel i until the k-th best candidate is
// provably closer than anything outside the scanned cube.
void knn_for(const std::vector<VoxelCoord>& positions, const VoxelLookup& lookup, std::size_t i,
             std::size_t k, std::vector<Candidate>& scratch, std::span<std::size_t> out) {
    scratch.clear();
    const auto& c = positions[i];
    const std::int64_t cx = c.x, cy = c.y, cz = c.z;
    auto visit = [&](std::int64_t dx, std::int64_t dy, std::int64_t dz) {
        const std::size_t j = lookup.find(cx + dx, cy + dy, cz + dz);
        if (j != VoxelLookup::kNone && j != i) {
            scratch.emplace_back(static_cast<std::uint64_t>(dx * dx + dy * dy + dz * dz), j);
        }
    };
    for (std::int64_t r = 1;; ++r) {
        for (std::int64_t dx = -r; dx <= r; ++dx) {
            for (std::int64_t dy = -r; dy <= r; ++dy) {
                if (std::abs(dx) == r || std::abs(dy) == r) {
                    for (std::int64_t dz = -r; dz <= r; ++dz) visit(dx, dy, dz);
                } else {
                    visit(dx, dy, -r);
                    visit(dx, dy, r);
                }
            }
        }
        const bool exhausted = r >= lookup.extent();
        if (scratch.size() >= k || exhausted) {
            std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k - 1), scratch.end());
            // Unscanned voxels have squared distance >= (r + 1)^2 > r^2.
            if (exhausted || scratch[k - 1].first <= static_cast<std::uint64_t>(r * r)) break;
        }
    }
    std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k), scratch.end());
    for (std::size_t n = 0; n < k; ++n) out[n] = scratch[n].second;
}

}  // namespace

std::vector<std::size_t> nearest_neighbors(const std::vector<VoxelCoord>& positions, std::size_t k,
                                           std::size_t threads) {
    const std::size_t count = positions.size();
    require(k >= 1 && k < count, ErrorCategory::parameter,
            "knn: k must satisfy 1 <= k < L (k=" + std::to_string(k) + ", L=" + std::to_string(count) + ")");
    for (std::size_t i = 1; i < count; ++i) {
        require(positions[i - 1] < positions[i], ErrorCategory::parameter,
                "knn: positions must be strictly lexicographically increasing");
    }
    const VoxelLookup lookup(positions);
    std::vector<std::size_t> out(count * k);
    parallel_for(count, threads, [&](std::size_t i) {
        thread_local std::vector<Candidate> scratch;
        knn_for(positions, lookup, i, k, scratch, std::span<std::size_t>(out.data() + i * k, k));
    });
    return out;
}

VoxelSelection knn_vote_refine(const VoxelSelection& selection, const std::vector<VoxelCoord>& positions,
                               const KnnVoteParams& params, std::size_t threads) {
    require(params.clear_fraction >= 0.0 && params.clear_fraction <= params.fill_fraction &&
                params.fill_fraction <= 1.0,
            ErrorCategory::parameter, "knn: require 0 <= clear_fraction <= fill_fraction <= 1");
    const std::size_t count = positions.size();
    validate(selection, count);
    const auto neighbors = nearest_neighbors(positions, params.k, threads);

    std::vector<std::uint8_t> selected(count, 0);
    for (auto i : selection.indices) selected[i] = 1;
    const double k = static_cast<double>(params.k);
    const double fill_at = params.fill_fraction * k;
    const double clear_below = params.clear_fraction * k;

    std::vector<std::uint8_t> result(count, 0);
    parallel_for(count, threads, [&](std::size_t i) {
        std::size_t votes = 0;
        for (std::size_t n = 0; n < params.k; ++n) votes += selected[neighbors[i * params.k + n]];
        const double s = static_cast<double>(votes);
        result[i] = selected[i] ? static_cast<std::uint8_t>(!(s < clear_below))
                                : static_cast<std::uint8_t>(s >= fill_at);
    });

    VoxelSelection out;
    for (std::size_t i = 0; i < count; ++i) {
        if (result[i]) out.indices.push_back(i);
    }
    return out;
}

VoxelSelection unaligned_complement(const std::vector<VoxelSelection>& selections, std::size_t voxel_count) {
    std::vector<std::uint8_t> covered(voxel_count, 0);
    for (const auto& sel : selections) {
        validate(sel, voxel_count);
        for (auto i : sel.indices) covered[i] = 1;
    }
    VoxelSelection out;
    for (std::size_t i = 0; i < voxel_count; ++i) {
        if (!covered[i]) out.indices.push_back(i);
    }
    return out;
}

namespace {
constexpr std::string_view kSlatMagic = "SLAT";
constexpr std::uint32_t kSlatVersion = 1;
}  // namespace

std::string encode_slat(const SparseVoxelLatent& slat) {
    slat.validate();
    detail::ByteWriter w;
    w.raw(kSlatMagic);
    w.uint<std::uint32_t>(kSlatVersion);
    w.uint<std::uint32_t>(slat.grid_size);
    w.uint<std::uint64_t>(slat.voxel_count());
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(slat.channels()));
    for (const auto& p : slat.positions) {
        w.uint<std::uint32_t>(p.x);
        w.uint<std::uint32_t>(p.y);
        w.uint<std::uint32_t>(p.z);
    }
    for (double v : slat.latents.data()) w.f32(static_cast<float>(v));
    return w.take();
}

SparseVoxelLatent decode_slat(const std::string& bytes) {
    detail::ByteReader r(bytes, "slat");
    if (r.raw(kSlatMagic.size()) != kSlatMagic) fail(ErrorCategory::format, "slat: bad magic");
    if (r.uint<std::uint32_t>() != kSlatVersion) fail(ErrorCategory::format, "slat: unsupported version");
    SparseVoxelLatent slat;
    slat.grid_size = r.uint<std::uint32_t>();
    const auto count = r.uint<std::uint64_t>();
    const auto channels = r.uint<std::uint32_t>();
    const std::uint64_t expected = count * 3 * 4 + count * channels * 4;
    if (count > bytes.size() || r.remaining() != expected) {
        fail(ErrorCategory::format, "slat: payload length does not match header");
    }
    slat.positions.resize(count);
    for (auto& p : slat.positions) {
        p.x = r.uint<std::uint32_t>();
        p.y = r.uint<std::uint32_t>();
        p.z = r.uint<std::uint32_t>();
    }
    slat.latents = Matrix(count, channels);
    for (double& v : slat.latents.data()) v = r.f32();
    slat.validate();
    return slat;
}

void save_slat(const std::filesystem::path& path, const SparseVoxelLatent& slat) {
    write_file(path, encode_slat(slat));
}

SparseVoxelLatent load_slat(const std::filesystem::path& path) { return decode_slat(read_file(path)); }

}  // namespace fusecond
