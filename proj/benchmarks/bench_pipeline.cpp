#include <benchmark/benchmark.h>

#include "illusion/challenge.hpp"
#include "illusion/convert.hpp"
#include "illusion/corpus.hpp"
#include "illusion/seed.hpp"
#include "illusion/sinewave.hpp"
#include "illusion/solver.hpp"

using namespace illusion;

namespace {

const Corpus& corpus() {
    static const Corpus c = load_corpus(std::filesystem::path(ILLUSION_BENCH_DATA_DIR) / "bundled/corpus/manifest.json");
    return c;
}

void analyze(benchmark::State& state) {
    const auto& clip = corpus().entries[0].clip;
    for (auto _ : state) benchmark::DoNotOptimize(analyze_formants(clip, SineWaveParams{}));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(clip.size()));
}
BENCHMARK(analyze)->Unit(benchmark::kMillisecond);

void render(benchmark::State& state) {
    const auto& clip = corpus().entries[0].clip;
    for (auto _ : state) benchmark::DoNotOptimize(render_sinewave(clip, SineWaveParams{}));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(clip.size()));
}
BENCHMARK(render)->Unit(benchmark::kMillisecond);

void convert(benchmark::State& state) {
    const auto x = render_sinewave(corpus().entries[0].clip, SineWaveParams{});
    ConversionParams p;
    std::uint64_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(irreversible_convert(x, p, i++));
}
BENCHMARK(convert)->Unit(benchmark::kMicrosecond);

void rms_attack(benchmark::State& state) {
    ConversionParams p;
    p.seed = 7;
    const auto ill = build_illusion_corpus(corpus(), SineWaveParams{}, p);
    const auto view = attacker_view(generate_challenge(corpus(), ill, 3, 0.3, derive_seed(7, "challenge", 0)));
    RmsSolver solver;
    for (auto _ : state) benchmark::DoNotOptimize(solver.solve(view));
}
BENCHMARK(rms_attack)->Unit(benchmark::kMicrosecond);

void illusion_corpus(benchmark::State& state) {
    ConversionParams p;
    p.seed = 7;
    for (auto _ : state) benchmark::DoNotOptimize(build_illusion_corpus(corpus(), SineWaveParams{}, p));
}
BENCHMARK(illusion_corpus)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
