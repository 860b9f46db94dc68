#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ranklens/corpus.hpp"

namespace ranklens {

// The five reference-document construction schemes. Query-side references are
// always the query itself (fixed_query_reference).
enum class ReferenceVariant : int {
    Oov = 0,            // a document of out-of-vocabulary markers
    IdfLow,             // tokens sampled from the lowest-idf slice of the vocabulary
    QlLow,              // tokens sampled from the lowest query-likelihood slice
    CollectionRand,     // a whole document sampled outside the retrieved pool
    TopkBottom,         // a whole document sampled from the bottom of the retrieved pool
};

constexpr ReferenceVariant kAllVariants[] = {ReferenceVariant::Oov, ReferenceVariant::IdfLow,
                                             ReferenceVariant::QlLow, ReferenceVariant::CollectionRand,
                                             ReferenceVariant::TopkBottom};

std::string to_string(ReferenceVariant variant);
ReferenceVariant reference_variant_from_string(const std::string& name);

// The marker token used by the Oov variant. Uppercase, so the lowercasing
// tokenizer can never produce it and it is out-of-vocabulary by construction.
inline const std::string kOovToken = "OOV";

struct ReferenceSpec {
    ReferenceVariant variant = ReferenceVariant::Oov;
    std::size_t n_samples = 1;  // forced to 1 for Oov (deterministic)
    std::uint64_t seed = 0;
    // IdfLow/QlLow: fraction of the vocabulary, ranked lowest, to sample from.
    double pool_fraction_vocab = 0.05;
    // TopkBottom: fraction of the ranked list counted as "bottom".
    double pool_fraction_topk = 0.10;
};

struct ReferenceDoc {
    std::vector<std::string> tokens;
    ReferenceVariant variant = ReferenceVariant::Oov;
    std::size_t sample_index = 0;
    std::string source_doc_id;  // document-level variants only
};

// Builds n_samples reference documents for one (query, doc) instance.
// Token-level variants emit exactly doc.tokens.size() tokens; document-level
// variants keep the sampled document's own tokens. All randomness derives
// from spec.seed plus the instance identity, so rebuilding is reproducible.
// Throws config_error when CollectionRand has no out-of-pool documents or
// QlLow is called without a language model.
std::vector<ReferenceDoc> build_reference(const ReferenceSpec& spec, const Query& query,
                                          const Document& doc, const CorpusIndex& index,
                                          const RankedList& topk, const UnigramLM* lm);

// The query-side reference is the query itself.
Query fixed_query_reference(const Query& query);

// Vocabulary slice the token-level variants sample from, exposed for
// invariant checks: terms sorted ascending by the statistic, cut at
// ceil(fraction * |V|), ties inside the cut resolved by term order.
std::vector<std::string> idf_low_pool(const CorpusIndex& index, double fraction);
std::vector<std::string> ql_low_pool(const CorpusIndex& index, const UnigramLM& lm, double fraction);

}  // namespace ranklens
