#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ranklens/corpus.hpp"
#include "ranklens/embedding.hpp"
#include "ranklens/graph.hpp"

namespace ranklens {

enum class ModelKind : int { Drmm = 0, MatchPyramid, PacrrDrmm };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

// Fixed by the architecture: DRMM drops OOV tokens during preprocessing,
// MatchPyramid represents them (and matrix padding) as the all-zeros vector,
// PACRR-DRMM as the vocabulary mean.
OovPolicy policy_for(ModelKind kind);

// An instance whose encoding carries no signal (every token filtered, or an
// all-OOV query). Logged and skipped by the pipeline, never silently scored.
struct unexplainable_error : error {
    using error::error;
};

struct ModelConfig {
    std::size_t max_query_terms = 5;
    std::size_t max_doc_tokens = 200;  // truncation drops the tail
    std::size_t embedding_dim = 50;

    // DRMM
    std::size_t bins = 30;
    bool log_counts = true;
    std::size_t drmm_hidden = 8;

    // MatchPyramid
    std::size_t mp_filters = 4;
    std::size_t mp_kernel = 3;
    std::size_t mp_pool_rows = 5;  // clamped to max_query_terms at build time
    std::size_t mp_pool_cols = 8;
    std::size_t mp_hidden = 16;

    // PACRR-DRMM
    std::vector<std::size_t> pacrr_kernel_sizes = {1, 2, 3};
    std::size_t pacrr_kmax = 2;
    std::size_t pacrr_hidden = 8;
};

struct NRModel {
    ModelKind kind = ModelKind::Drmm;
    OovPolicy policy = OovPolicy::Filter;
    ModelConfig config;
    ComputeGraph graph;
    std::uint64_t init_seed = 0;
};

// Builds an untrained model with seeded parameters. The overload taking an
// explicit policy rejects any binding that contradicts the architecture.
NRModel make_model(ModelKind kind, const ModelConfig& config, std::uint64_t seed);
NRModel make_model(ModelKind kind, OovPolicy policy, const ModelConfig& config, std::uint64_t seed);

// Per-query-term bucketed similarity counts (DRMM input). Bin layout: the
// first `bins - 1` equal-width intervals cover [-1, 1), the last bin holds
// exact matches (similarity 1).
struct Histogram {
    Tensor bins;  // (q_terms, bin_count); log(1 + count) when log mode is on
    std::vector<std::vector<std::vector<std::size_t>>> provenance;  // [q][bin] -> token positions
};

// q-term x doc-position cosine grid (MatchPyramid / PACRR-DRMM input).
struct InteractionMatrix {
    Tensor cells;                // (q_terms, width)
    std::vector<bool> pad_mask;  // true where the column holds no real token
};

// Everything one (query, doc) encoding produced: graph input tensors plus the
// provenance needed to map input-space contributions back onto tokens.
struct EncodedInstance {
    std::map<std::string, Tensor> inputs;
    bool histogram_mode = false;
    std::vector<std::vector<std::vector<std::size_t>>> bin_provenance;
    std::vector<bool> pad_mask;
    std::vector<std::string> doc_tokens;    // position-aligned with provenance
    std::vector<std::string> query_tokens;  // kept query terms
};

// DRMM input construction. Throws unexplainable_error when every document
// token is filtered, unless allow_empty (reference and perturbation paths,
// where an all-zero histogram is the intended degenerate encoding).
Histogram build_histogram(const std::vector<std::string>& query_tokens,
                          const std::vector<std::string>& doc_tokens, const EmbeddingTable& table,
                          const ModelConfig& config, bool allow_empty = false);

// Interaction grid under the model's OOV policy, truncated/padded to
// target_width (0 = the document's own effective length).
InteractionMatrix build_interaction_matrix(const std::vector<std::string>& query_tokens,
                                           const std::vector<std::string>& doc_tokens,
                                           const EmbeddingTable& table, const ModelConfig& config,
                                           OovPolicy policy, std::size_t target_width = 0);

// Full instance encoding for the given model. target_width forces the matrix
// width (used to align a reference document with the instance it explains).
EncodedInstance encode_instance(const NRModel& model, const Query& query,
                                const std::vector<std::string>& doc_tokens,
                                const EmbeddingTable& table, std::size_t target_width = 0,
                                bool allow_empty = false);

struct ScoredInstance {
    double score = 0.0;
    ActivationTrace trace;
    EncodedInstance encoded;
};

// Deterministic forward scoring with trace and provenance retained.
ScoredInstance score_instance(const NRModel& model, const Query& query,
                              const std::vector<std::string>& doc_tokens,
                              const EmbeddingTable& table, std::size_t target_width = 0,
                              bool allow_empty = false);

// Plain score without attribution bookkeeping (training / ranking / LIME).
double score_only(const NRModel& model, const Query& query,
                  const std::vector<std::string>& doc_tokens, const EmbeddingTable& table);

// Maps input-space contributions onto document token positions.
// Matrix mode sums each column; histogram mode splits each (q-term, bin) cell
// equally over the bin's tokens, falling back to an equal split over all kept
// tokens for cells whose input bin is empty (the reference filled a bin the
// document does not occupy), which keeps the total exactly conserved.
std::vector<double> attribute_to_tokens(const std::map<std::string, Tensor>& contributions,
                                        const EncodedInstance& encoded);

// Model checkpoint (graph + kind + config + seed) and model card helpers.
std::string serialize_model(const NRModel& model);
NRModel deserialize_model(const std::string& json_text);

}  // namespace ranklens
