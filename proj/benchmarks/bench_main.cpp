// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "mint/adaptation.hpp"
#include "mint/encoder.hpp"
#include "mint/memory_bank.hpp"

namespace {

mint::EncoderConfig bench_encoder() {
    mint::EncoderConfig c;
    c.image_dim = 16;
    c.text_dim = 16;
    c.image_depth = 4;
    c.text_depth = 2;
    c.grid = 4;
    c.patch_dim = 8;
    c.num_classes = 10;
    c.text_prompt_length = 4;
    c.class_name_length = 2;
    c.query_layers = 3;
    return c;
}

void BM_EncodeImage(benchmark::State& state) {
    const mint::DualEncoder encoder(bench_encoder());
    std::mt19937_64 rng(1);
    const auto x = mint::Tensor::randn({encoder.config().patches(), encoder.config().patch_dim}, rng);
    for (auto _ : state) benchmark::DoNotOptimize(encoder.encode_image(x));
}
BENCHMARK(BM_EncodeImage);

void BM_Retrieve(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto bank = mint::MemoryPromptBank::init(n, 2, 16, 3);
    std::mt19937_64 rng(2);
    const auto q = mint::Tensor::randn({16}, rng);
    for (auto _ : state) benchmark::DoNotOptimize(mint::retrieve(bank, q, 3));
}
BENCHMARK(BM_Retrieve)->Arg(64)->Arg(512)->Arg(4096);

void BM_AdaptEpisode(benchmark::State& state) {
    const mint::DualEncoder encoder(bench_encoder());
    mint::AdaptConfig config;
    config.views = static_cast<std::size_t>(state.range(0));
    config.persistence = mint::PersistencePolicy::FullyEpisodic;
    mint::AdaptationEngine engine(encoder, config);
    std::mt19937_64 rng(4);
    const mint::StreamSample sample{0, mint::Tensor::randn({encoder.config().patches(), 8}, rng), 0, "bench"};
    for (auto _ : state) benchmark::DoNotOptimize(engine.process(sample));
}
BENCHMARK(BM_AdaptEpisode)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
