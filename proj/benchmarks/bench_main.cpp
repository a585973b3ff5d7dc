#include <benchmark/benchmark.h>

#include "fusecond/attention.hpp"
#include "fusecond/flow_model.hpp"
#include "fusecond/random.hpp"
#include "fusecond/sparse_voxel.hpp"
#include "fusecond/toy_encoder.hpp"
#include "fusecond_checks/oracles.hpp"

using namespace fusecond;

static void BM_KnnVoteRefine(benchmark::State& state) {
    SplitMix64 rng(1);
    const auto positions = oracle::random_voxels(rng, static_cast<std::size_t>(state.range(0)), 32);
    const VoxelSelection sel{oracle::random_subset(rng, positions.size(), 0.5)};
    const auto threads = static_cast<std::size_t>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(knn_vote_refine(sel, positions, {}, threads));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KnnVoteRefine)->Args({500, 1})->Args({2000, 1})->Args({2000, 4})->Unit(benchmark::kMillisecond);

static void BM_CrossAttention(benchmark::State& state) {
    SplitMix64 rng(2);
    const auto l = static_cast<std::size_t>(state.range(0));
    const auto t = static_cast<std::size_t>(state.range(1));
    const Matrix q = oracle::random_matrix(rng, l, 64);
    const Matrix k = oracle::random_matrix(rng, t, 64);
    const Matrix v = oracle::random_matrix(rng, t, 64);
    Matrix scale(l, t, 1.0);
    AttentionOptions opts;
    opts.logit_scale = &scale;
    for (auto _ : state) benchmark::DoNotOptimize(multi_head_attention(q, k, v, 4, opts));
}
BENCHMARK(BM_CrossAttention)->Args({500, 200})->Args({2000, 800})->Unit(benchmark::kMillisecond);

static void BM_FlowVelocity(benchmark::State& state) {
    FlowModelConfig cfg;
    const FlowModel model(cfg);
    SplitMix64 rng(3);
    SparseVoxelLatent latent;
    latent.grid_size = cfg.grid_size;
    latent.positions = oracle::random_voxels(rng, static_cast<std::size_t>(state.range(0)), cfg.grid_size);
    latent.latents = oracle::random_matrix(rng, latent.positions.size(), cfg.latent_dim);
    const Matrix tokens = oracle::random_matrix(rng, 300, cfg.token_dim);
    for (auto _ : state) benchmark::DoNotOptimize(model.velocity(latent, 0.5, tokens));
}
BENCHMARK(BM_FlowVelocity)->Arg(500)->Arg(1500)->Unit(benchmark::kMillisecond);

static void BM_EncodeImage(benchmark::State& state) {
    const ToyEncoder encoder(EncoderConfig{});
    const auto side = static_cast<std::size_t>(state.range(0));
    PixelGrid pixels(side, side, 3);
    SplitMix64 rng(4);
    for (auto& p : pixels.values) p = rng.uniform();
    const ImageGeometry geom(side, side);
    for (auto _ : state) benchmark::DoNotOptimize(encoder.encode_image(pixels, geom));
}
BENCHMARK(BM_EncodeImage)->Arg(112)->Arg(224)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
