#include "doctest.h"

#include <limits>
#include <algorithm>

#include "fusecond/error.hpp"
#include "fusecond/sparse_voxel.hpp"
#include "fusecond_checks/oracles.hpp"

using namespace fusecond;

namespace {

std::vector<VoxelCoord> cube(std::uint32_t n) {
    DenseBinaryGrid g(n);
    std::fill(g.cells.begin(), g.cells.end(), 1);
    return grid_to_positions(g);
}

std::size_t index_of(const std::vector<VoxelCoord>& pos, VoxelCoord c) {
    return static_cast<std::size_t>(std::lower_bound(pos.begin(), pos.end(), c) - pos.begin());
}

}  // namespace

TEST_CASE("grid to positions") {
    DenseBinaryGrid single(4);
    single.at(0, 0, 0) = 1;
    CHECK(grid_to_positions(single) == std::vector<VoxelCoord>{{0, 0, 0}});

    const auto full = cube(2);
    REQUIRE(full.size() == 8);
    CHECK(std::is_sorted(full.begin(), full.end()));
    CHECK(full[1] == VoxelCoord{0, 0, 1});
    CHECK(full[4] == VoxelCoord{1, 0, 0});

    try {
        grid_to_positions(DenseBinaryGrid(3));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::empty_structure);
    }

    SplitMix64 rng(41);
    DenseBinaryGrid g(8);
    for (auto& c : g.cells) c = rng.uniform() < 0.3 ? 1 : 0;
    std::vector<VoxelCoord> expected;
    for (std::uint32_t x = 0; x < 8; ++x) {
        for (std::uint32_t y = 0; y < 8; ++y) {
            for (std::uint32_t z = 0; z < 8; ++z) {
                if (g.at(x, y, z)) expected.push_back({x, y, z});
            }
        }
    }
    CHECK(grid_to_positions(g) == expected);
}

TEST_CASE("isolated selected voxel is cleared, surrounded voxel is filled") {
    const auto pos = cube(3);
    const std::size_t centre = index_of(pos, {1, 1, 1});

    const auto cleared = knn_vote_refine(VoxelSelection{{centre}}, pos);
    CHECK(cleared.empty());

    std::vector<std::size_t> all_but_centre;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        if (i != centre) all_but_centre.push_back(i);
    }
    const auto filled = knn_vote_refine(VoxelSelection{all_but_centre}, pos);
    CHECK(std::binary_search(filled.indices.begin(), filled.indices.end(), centre));

    CHECK(knn_vote_refine(VoxelSelection{}, pos).empty());
}

TEST_CASE("neighbour ties resolve in lexicographic order") {
    const auto pos = cube(3);
    const auto nn = nearest_neighbors(pos, 6);
    const std::size_t centre = index_of(pos, {1, 1, 1});
    const std::vector<std::size_t> faces = {index_of(pos, {0, 1, 1}), index_of(pos, {1, 0, 1}), index_of(pos, {1, 1, 0}),
                                            index_of(pos, {1, 1, 2}), index_of(pos, {1, 2, 1}), index_of(pos, {2, 1, 1})};
    CHECK(std::equal(faces.begin(), faces.end(), nn.begin() + centre * 6));
}

TEST_CASE("vote thresholds are real fractions of k") {
    // Hand-built instance: voxel 0 at the origin and 16 neighbours on a line,
    // all at distinct distances, plus far-away filler.
    std::vector<VoxelCoord> pos;
    for (std::uint32_t z = 0; z <= 16; ++z) pos.push_back({0, 0, z});
    for (std::uint32_t z = 0; z < 4; ++z) pos.push_back({30, 30, z});
    std::sort(pos.begin(), pos.end());
    const auto neighbours_of_origin = nearest_neighbors(pos, 16);
    std::vector<std::size_t> ring(neighbours_of_origin.begin(), neighbours_of_origin.begin() + 16);
    std::sort(ring.begin(), ring.end());

    auto with_votes = [&](std::size_t votes, bool self) {
        std::vector<std::size_t> sel(ring.begin(), ring.begin() + static_cast<std::ptrdiff_t>(votes));
        if (self) sel.insert(sel.begin(), 0);
        std::sort(sel.begin(), sel.end());
        const auto out = knn_vote_refine(VoxelSelection{sel}, pos);
        return std::binary_search(out.indices.begin(), out.indices.end(), std::size_t{0});
    };
    CHECK(with_votes(10, false));       // 10 >= 9.6
    CHECK_FALSE(with_votes(9, false));  // 9 < 9.6
    CHECK(with_votes(7, true));         // 7 >= 6.4 stays
    CHECK_FALSE(with_votes(6, true));   // 6 < 6.4 leaves
}

TEST_CASE("refinement keeps the interior of a solid box") {
    const auto pos = cube(10);
    std::vector<std::size_t> box;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        const auto& p = pos[i];
        if (p.x >= 2 && p.x <= 7 && p.y >= 2 && p.y <= 7 && p.z >= 2 && p.z <= 7) box.push_back(i);
    }
    const auto out = knn_vote_refine(VoxelSelection{box}, pos, KnnVoteParams{16, 0.5, 0.5});
    for (std::size_t i : box) {
        const auto& p = pos[i];
        if (p.x >= 3 && p.x <= 6 && p.y >= 3 && p.y <= 6 && p.z >= 3 && p.z <= 6) {
            CHECK(std::binary_search(out.indices.begin(), out.indices.end(), i));
        }
    }
}

TEST_CASE("refinement equals the brute-force oracle and is schedule independent") {
    SplitMix64 rng(42);
    for (int trial = 0; trial < 30; ++trial) {
        const auto pos = oracle::random_voxels(rng, oracle::random_between(rng, 17, 300), 9);
        const auto sel = oracle::random_subset(rng, pos.size(), rng.uniform());
        const auto expected = oracle::vote(sel, pos, {}, oracle::random_permutation(rng, pos.size()));
        for (std::size_t threads : {1, 2, 5}) {
            CHECK(knn_vote_refine(VoxelSelection{sel}, pos, {}, threads).indices == expected);
        }
    }
}

TEST_CASE("refinement parameter errors") {
    const auto pos = cube(2);
    try {
        knn_vote_refine(VoxelSelection{}, pos);
        FAIL("k = 16 >= L = 8 should fail");
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::parameter);
    }
    const auto big = cube(3);
    CHECK_THROWS_AS(knn_vote_refine(VoxelSelection{}, big, KnnVoteParams{4, 0.3, 0.5}), Error);
    CHECK_THROWS_AS(knn_vote_refine(VoxelSelection{}, big, KnnVoteParams{4, 1.5, 0.5}), Error);
    CHECK_THROWS_AS(knn_vote_refine(VoxelSelection{{3, 1}}, big, KnnVoteParams{4, 0.6, 0.4}), Error);
    CHECK_THROWS_AS(nearest_neighbors(big, 0), Error);
}

TEST_CASE("unaligned complement") {
    CHECK(unaligned_complement({}, 4).indices == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(unaligned_complement({VoxelSelection{{0, 1}}, VoxelSelection{{1, 2, 3}}}, 4).empty());

    SplitMix64 rng(43);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t l = oracle::random_between(rng, 1, 200);
        std::vector<VoxelSelection> sels;
        std::vector<std::vector<std::size_t>> raw;
        for (std::size_t k = 0, n = oracle::random_between(rng, 0, 4); k < n; ++k) {
            raw.push_back(oracle::random_subset(rng, l, rng.uniform() * 0.5));
            sels.push_back(VoxelSelection{raw.back()});
        }
        const auto comp = unaligned_complement(sels, l);
        CHECK(comp.indices == oracle::complement(raw, l));
        std::vector<int> hits(l, 0);
        for (auto i : comp.indices) hits[i] += 1;
        for (const auto& s : raw) {
            for (auto i : s) {
                CHECK_FALSE(std::binary_search(comp.indices.begin(), comp.indices.end(), i));
                hits[i] = std::max(hits[i], 1);
            }
        }
        CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    }
}

TEST_CASE("SLat format round trip and validation") {
    SplitMix64 rng(44);
    SparseVoxelLatent slat{16, oracle::random_voxels(rng, 20, 16), oracle::random_matrix(rng, 20, 5)};
    for (auto& v : slat.latents.data()) v = static_cast<float>(v);
    const std::string bytes = encode_slat(slat);
    CHECK(bytes.size() == 4 + 4 + 4 + 8 + 4 + 20 * 12 + 20 * 5 * 4);
    CHECK(bytes.substr(0, 4) == "SLAT");
    CHECK(decode_slat(bytes) == slat);

    CHECK_THROWS_AS(decode_slat(bytes.substr(0, bytes.size() - 1)), Error);
    CHECK_THROWS_AS(decode_slat(bytes + "x"), Error);
    std::string bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_slat(bad), Error);

    auto unsorted = slat;
    std::swap(unsorted.positions[0], unsorted.positions[1]);
    CHECK_THROWS_AS(unsorted.validate(), Error);
    auto outside = slat;
    outside.positions.back().z = 16;
    CHECK_THROWS_AS(outside.validate(), Error);
    auto nan = slat;
    nan.latents(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(nan.validate(), Error);
}
