#include <benchmark/benchmark.h>

#include "ranklens/models.hpp"
#include "ranklens/reference.hpp"
#include "ranklens/rng.hpp"

namespace {

struct Setup {
    ranklens::EmbeddingTable table;
    ranklens::Query query{"q", {"harvest", "drought", "irrigation"}};
    std::vector<std::string> doc;

    Setup() : table(ranklens::generate_embeddings(vocabulary(), 50, 13)) {
        ranklens::Rng rng(7);
        auto vocab = vocabulary();
        for (int i = 0; i < 150; ++i) doc.push_back(vocab[rng.next_index(vocab.size())]);
    }

    static std::vector<std::string> vocabulary() {
        std::vector<std::string> v = {"harvest", "drought", "irrigation"};
        for (int i = 0; i < 200; ++i) v.push_back("w" + std::to_string(i));
        return v;
    }
};

Setup& setup() {
    static Setup s;
    return s;
}

}  // namespace

static void BM_ScoreInstance(benchmark::State& state) {
    auto kind = static_cast<ranklens::ModelKind>(state.range(0));
    ranklens::ModelConfig config;
    auto model = ranklens::make_model(kind, config, 5);
    auto& s = setup();
    for (auto _ : state) {
        benchmark::DoNotOptimize(ranklens::score_instance(model, s.query, s.doc, s.table));
    }
}
BENCHMARK(BM_ScoreInstance)->Arg(0)->Arg(1)->Arg(2);

static void BM_DeepLiftBackward(benchmark::State& state) {
    auto kind = static_cast<ranklens::ModelKind>(state.range(0));
    ranklens::ModelConfig config;
    auto model = ranklens::make_model(kind, config, 5);
    auto& s = setup();
    auto input = ranklens::score_instance(model, s.query, s.doc, s.table);
    std::size_t width = input.encoded.histogram_mode
                            ? 0
                            : input.encoded.inputs.at("interaction").shape.back();
    std::vector<std::string> ref_tokens(s.doc.size(), ranklens::kOovToken);
    auto ref = ranklens::score_instance(model, s.query, ref_tokens, s.table, width, true);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            ranklens::deeplift_contributions(model.graph, input.trace, ref.trace));
    }
}
BENCHMARK(BM_DeepLiftBackward)->Arg(0)->Arg(1)->Arg(2);
