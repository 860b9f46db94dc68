#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ranklens/models.hpp"
#include "ranklens/reference.hpp"

namespace ranklens {

// Parsed experiment configuration. Every random decision in the pipeline is
// seeded from here; there is no unseeded randomness anywhere.
struct ExperimentConfig {
    std::string corpus_path;
    std::string queries_path;

    std::string embedding_source = "seeded";  // "seeded" or a file path
    std::size_t embedding_dim = 50;
    std::uint64_t embedding_seed = 13;

    std::size_t retrieval_depth = 1000;
    std::size_t explain_top = 3;  // documents explained per query

    std::vector<ModelKind> model_kinds = {ModelKind::Drmm, ModelKind::MatchPyramid,
                                          ModelKind::PacrrDrmm};
    ModelConfig model;
    std::uint64_t train_seed = 7;
    std::size_t train_epochs = 20;
    double train_learning_rate = 0.05;
    double train_margin = 1.0;
    std::size_t train_batch = 8;
    std::size_t train_positives = 3;       // BM25 pseudo-relevant per query
    std::size_t train_negatives_per = 3;   // sampled from lower ranks

    std::vector<ReferenceVariant> variants = {ReferenceVariant::Oov, ReferenceVariant::IdfLow,
                                              ReferenceVariant::QlLow, ReferenceVariant::CollectionRand,
                                              ReferenceVariant::TopkBottom};
    std::size_t reference_samples = 1;
    std::uint64_t reference_seed = 11;
    double pool_fraction_vocab = 0.05;
    double pool_fraction_topk = 0.10;

    std::size_t lime_samples = 5000;
    std::size_t lime_k_words = 30;
    double lime_regularization = 1e-6;
    std::uint64_t lime_seed = 17;

    std::size_t eval_k_terms = 30;
    std::vector<std::size_t> eval_k_lime = {10, 20, 30};
    std::vector<std::size_t> eval_k_shap = {50, 100};

    std::string output_dir = "out";
};

// Key/value config text, TOML-style. Grammar (documented here and in the
// README):
//   - comments start with '#' and run to end of line
//   - [section] headers group keys; keys are section.key
//   - key = value, one per line
//   - values: "quoted strings", integers, decimals, true/false, and
//     [a, b, c] arrays of those scalars
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// Canonical serialization used for the provenance hash.
std::string canonical_config(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);

}  // namespace ranklens
