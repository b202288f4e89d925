#include <random>

#include <benchmark/benchmark.h>

#include "deltadpd/delta.hpp"
#include "deltadpd/rnn.hpp"

using namespace deltadpd;

namespace {

FeatureSeq bench_feats(std::size_t n) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(-0.5, 0.5);
    FeatureSeq fs;
    for (std::size_t i = 0; i < n; ++i) {
        Vec6 f;
        for (int k = 0; k < 6; ++k) f(k) = d(rng);
        fs.frames.push_back(f);
    }
    return fs;
}

void BM_dense_forward(benchmark::State& state) {
    auto m = cast_model<double, float>(
        init_weights<double>(CellKind::Gru, static_cast<int>(state.range(0)), 3));
    auto feats = bench_feats(4096);
    for (auto _ : state) {
        auto out = forward(m, feats);
        benchmark::DoNotOptimize(out.samples.data());
    }
    state.SetItemsProcessed(state.iterations() * 4096);
}

void BM_delta_forward(benchmark::State& state) {
    auto m = cast_model<double, float>(
        init_weights<double>(CellKind::Gru, static_cast<int>(state.range(0)), 3));
    auto feats = bench_feats(4096);
    const ThresholdConfig th{0.0, static_cast<double>(state.range(1)) / 1000.0};
    double gamma = 0.0;
    for (auto _ : state) {
        auto [out, stats] = run_delta(m, feats, th);
        gamma = stats.gamma_overall();
        benchmark::DoNotOptimize(out.samples.data());
    }
    state.counters["gamma"] = gamma;
    state.SetItemsProcessed(state.iterations() * 4096);
}

} // namespace

BENCHMARK(BM_dense_forward)->Arg(15)->Arg(64);
BENCHMARK(BM_delta_forward)->Args({15, 0})->Args({15, 50})->Args({15, 400})->Args({64, 50});
