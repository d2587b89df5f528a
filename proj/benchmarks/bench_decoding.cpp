#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "acs/backend.hpp"
#include "acs/decode.hpp"
#include "acs/metrics.hpp"
#include "acs/prob.hpp"
#include "acs/rng.hpp"

using namespace acs;

namespace {

ProbabilityDistribution random_distribution(SplitMix64 & rng, std::size_t vocab) {
    ProbabilityDistribution dist;
    dist.probs.resize(vocab);
    double total = 0.0;
    for (double & p : dist.probs) {
        p = -std::log(1.0 - rng.next_unit());
        total += p;
    }
    for (double & p : dist.probs) {
        p /= total;
    }
    return dist;
}

void BM_ShannonEntropy(benchmark::State & state) {
    SplitMix64 rng(1);
    const auto dist = random_distribution(rng, state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(shannon_entropy(dist));
    }
}

void BM_TopkEntropy(benchmark::State & state) {
    SplitMix64 rng(2);
    const auto dist = random_distribution(rng, state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(topk_entropy(dist, 10));
    }
}

void BM_SyntheticStep(benchmark::State & state) {
    const auto backend = make_synthetic_backend(state.range(0), 256, 7, 0.5);
    std::vector<TokenId> context{1, 2, 3, 4, 5};
    for (auto _ : state) {
        benchmark::DoNotOptimize(backend->step(context));
    }
}

void BM_Generate(benchmark::State & state, DecodeMethod method) {
    const auto backend = make_synthetic_backend(256, 256, 7, 0.5);
    DecoderConfig config;
    config.method = method;
    config.k = 10;
    config.q = 1.0;
    config.max_new_tokens = static_cast<int>(state.range(0));
    const std::vector<TokenId> prompt{3, 1, 4, 1, 5};
    std::size_t tokens = 0;
    for (auto _ : state) {
        const auto result = generate(*backend, prompt, config);
        tokens += result.tokens.size();
        benchmark::DoNotOptimize(result);
    }
    state.SetItemsProcessed(static_cast<int64_t>(tokens));
}

void BM_Diversity(benchmark::State & state) {
    SplitMix64 rng(3);
    std::vector<TokenId> tokens(state.range(0));
    for (auto & t : tokens) {
        t = static_cast<TokenId>(rng.next() % 64);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(diversity(tokens));
    }
}

} // namespace

BENCHMARK(BM_ShannonEntropy)->Arg(256)->Arg(4096);
BENCHMARK(BM_TopkEntropy)->Arg(256)->Arg(4096);
BENCHMARK(BM_SyntheticStep)->Arg(256)->Arg(1024);
BENCHMARK_CAPTURE(BM_Generate, greedy, DecodeMethod::greedy)->Arg(64);
BENCHMARK_CAPTURE(BM_Generate, contrastive, DecodeMethod::contrastive)->Arg(64);
BENCHMARK_CAPTURE(BM_Generate, adaptive, DecodeMethod::adaptive_contrastive)->Arg(64);
BENCHMARK_CAPTURE(BM_Generate, adaptive_double_exp, DecodeMethod::adaptive_double_exp)->Arg(64);
BENCHMARK(BM_Diversity)->Arg(128)->Arg(1024);

BENCHMARK_MAIN();
