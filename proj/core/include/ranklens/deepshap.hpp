#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ranklens/models.hpp"
#include "ranklens/reference.hpp"

namespace ranklens {

// Signed per-word contribution estimates for one (query, document, model,
// reference-variant) instance. Token positions are aggregated into unique
// words by summation; words sum to score_input - score_reference_mean.
struct Attribution {
    std::string query_id;
    std::string doc_id;
    ModelKind model = ModelKind::Drmm;
    ReferenceVariant variant = ReferenceVariant::Oov;
    std::map<std::string, double> token_scores;
    double score_input = 0.0;
    double score_reference_mean = 0.0;
    std::uint64_t seed = 0;
};

struct ExplainContext {
    const CorpusIndex* index = nullptr;
    const RankedList* topk = nullptr;
    const UnigramLM* lm = nullptr;
    const EmbeddingTable* table = nullptr;
};

// Relative tolerance on the conservation identity
// sum(token_scores) == score_input - score_reference_mean.
constexpr double kConservationTol = 1e-4;

// Runs the full attribution for one instance: builds each reference sample
// with the model's own input pipeline, forwards both traces, backpropagates
// the layer multipliers, maps contributions onto tokens, and averages over
// samples. A conservation violation beyond tolerance throws numeric_error —
// it signals an attribution bug and is never repaired silently.
Attribution explain(const NRModel& model, const Query& query, const Document& doc,
                    const ReferenceSpec& spec, const ExplainContext& context);

// Same attribution machinery over caller-supplied reference documents.
// explain() delegates here after build_reference.
Attribution explain_with_references(const NRModel& model, const Query& query, const Document& doc,
                                    const std::vector<ReferenceDoc>& references,
                                    const EmbeddingTable& table);

// Words ranked by |score| descending (polarity ignored), ties broken
// lexicographically ascending, truncated to k.
std::vector<std::string> top_terms(const Attribution& attribution, std::size_t k);

// JSONL records {qid, docid, model, variant, scores, score_input,
// score_ref_mean, seed, config_hash}.
void write_attribution_jsonl(std::ostream& out, const Attribution& attribution,
                             const std::string& config_hash);
Attribution read_attribution_json(const std::string& line);

}  // namespace ranklens
