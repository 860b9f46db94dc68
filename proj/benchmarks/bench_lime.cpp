#include <benchmark/benchmark.h>

#include "ranklens/lime.hpp"
#include "ranklens/rng.hpp"

namespace {

ranklens::WordUniverse universe(std::size_t n_words) {
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < n_words * 2; ++i) tokens.push_back("w" + std::to_string(i % n_words));
    return ranklens::word_universe(tokens);
}

}  // namespace

static void BM_Perturb5000(benchmark::State& state) {
    auto u = universe(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(ranklens::perturb(u, 5000, 17));
    }
}
BENCHMARK(BM_Perturb5000)->Arg(40)->Arg(80);

static void BM_FitSurrogate(benchmark::State& state) {
    auto u = universe(static_cast<std::size_t>(state.range(0)));
    auto samples = ranklens::perturb(u, 5000, 17);
    ranklens::Rng rng(3);
    std::vector<double> truth(u.words.size());
    for (double& w : truth) w = rng.next_gaussian();
    for (auto& s : samples) {
        double y = 0.0;
        for (std::size_t i = 0; i < truth.size(); ++i) y += s.mask[i] ? truth[i] : 0.0;
        s.model_score = y + 0.01 * rng.next_gaussian();
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(ranklens::fit_surrogate(samples, u, 30, 1e-6, 11));
    }
}
BENCHMARK(BM_FitSurrogate)->Arg(40)->Arg(80);
