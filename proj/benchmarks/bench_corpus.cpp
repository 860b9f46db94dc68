#include <benchmark/benchmark.h>

#include "ranklens/corpus.hpp"

namespace {

std::string fixture(const std::string& name) {
    return std::string(RANKLENS_SOURCE_DIR) + "/tests/fixtures/" + name;
}

const std::vector<ranklens::Document>& corpus() {
    static auto docs = ranklens::load_corpus_jsonl_file(fixture("corpus.jsonl"));
    return docs;
}

}  // namespace

static void BM_Tokenize(benchmark::State& state) {
    const auto& docs = corpus();
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ranklens::tokenize(docs[i % docs.size()].raw_text));
        ++i;
    }
}
BENCHMARK(BM_Tokenize);

static void BM_BuildIndex(benchmark::State& state) {
    const auto& docs = corpus();
    for (auto _ : state) {
        benchmark::DoNotOptimize(ranklens::build_index(docs));
    }
}
BENCHMARK(BM_BuildIndex);

static void BM_RetrieveTop100(benchmark::State& state) {
    auto index = ranklens::build_index(corpus());
    ranklens::Query q{"q", {"harvest", "drought", "irrigation"}};
    for (auto _ : state) {
        benchmark::DoNotOptimize(ranklens::retrieve(q, index, 100));
    }
}
BENCHMARK(BM_RetrieveTop100);

static void BM_BuildLanguageModel(benchmark::State& state) {
    auto index = ranklens::build_index(corpus());
    ranklens::Query q{"q", {"harvest", "drought"}};
    auto ranked = ranklens::retrieve(q, index, 50);
    std::vector<std::string> ids;
    for (const auto& e : ranked.entries) ids.push_back(e.doc_id);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ranklens::build_lm(ids, index));
    }
}
BENCHMARK(BM_BuildLanguageModel);
