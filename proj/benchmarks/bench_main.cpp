#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "fbmvar/fgn.hpp"
#include "fbmvar/hermite.hpp"
#include "fbmvar/limitlaws.hpp"
#include "fbmvar/rng.hpp"
#include "fbmvar/series.hpp"
#include "fbmvar/variations.hpp"

namespace {

void bm_rng_normals(benchmark::State& state) {
    fbmvar::RandomStream stream(12345);
    double acc = 0.0;
    for (auto _ : state) {
        acc += stream.next_normal();
    }
    benchmark::DoNotOptimize(acc);
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_rng_normals);

void bm_rng_word_at(benchmark::State& state) {
    fbmvar::RandomStream stream(12345);
    std::uint64_t i = 0;
    std::uint64_t acc = 0;
    for (auto _ : state) {
        acc ^= stream.word_at(i++);
    }
    benchmark::DoNotOptimize(acc);
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_rng_word_at);

void bm_synthesize(benchmark::State& state) {
    const double H = static_cast<double>(state.range(0)) / 10.0;
    const auto n = static_cast<std::size_t>(state.range(1));
    fbmvar::FgnSynthesizer synth(H, n);
    fbmvar::RandomStream stream(98765);
    std::vector<double> out(n);
    for (auto _ : state) {
        synth.sample(stream, out.data());
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
    state.SetLabel(fbmvar::synthesis_method_name(synth.info().method));
}
BENCHMARK(bm_synthesize)
    ->ArgsProduct({{3, 5, 9}, {256, 4096, 65536}})
    ->ArgNames({"H10", "n"});

void bm_compute_vn(benchmark::State& state) {
    const auto q = static_cast<unsigned>(state.range(0));
    const auto n = static_cast<std::size_t>(state.range(1));
    fbmvar::RandomStream stream(555);
    std::vector<double> x(n);
    for (auto& v : x) v = stream.next_normal();
    for (auto _ : state) {
        benchmark::DoNotOptimize(fbmvar::compute_vn(q, x.data(), n));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(bm_compute_vn)
    ->ArgsProduct({{2, 3, 4}, {4096, 65536}})
    ->ArgNames({"q", "n"});

void bm_variation_draw(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    fbmvar::VariationSampler sampler(2, 0.5, n);
    fbmvar::RandomStream stream(777);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sampler.draw(stream));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(bm_variation_draw)->Arg(1024)->Arg(16384)->ArgName("n");

void bm_tail_prob(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto& consts = fbmvar::constants_for(2, 0.5);
    const double threshold =
        fbmvar::series_threshold(fbmvar::SeriesKind::g1, 2, 0.5,
                                 0.3 * consts.c1, n);
    fbmvar::RandomStream stream(31415);
    for (auto _ : state) {
        const auto p = fbmvar::tail_prob_mc(2, 0.5, n, threshold, 200, stream);
        benchmark::DoNotOptimize(p.p_hat);
    }
    state.SetItemsProcessed(state.iterations() * 200 *
                            static_cast<std::int64_t>(n));
}
BENCHMARK(bm_tail_prob)->Arg(64)->Arg(1024)->ArgName("n");

} // namespace

BENCHMARK_MAIN();
