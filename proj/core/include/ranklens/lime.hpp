#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ranklens/errors.hpp"

namespace ranklens {

// One perturbed version of a document: a keep/drop mask over its unique
// words. locality_weight = exp(-d^2 / sigma^2) with d the cosine distance
// between the mask and the all-ones mask.
struct PerturbationSample {
    std::vector<std::uint8_t> mask;  // 1 = word kept
    double model_score = 0.0;
    double locality_weight = 1.0;
};

struct LimeFidelity {
    double train_mse = 0.0;
    double test_mse = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
};

struct LimeExplanation {
    std::vector<std::string> selected_words;  // |surrogate weight| descending
    std::map<std::string, double> weights;    // selected words only
    double intercept = 0.0;
    LimeFidelity fidelity;
    std::size_t k_words = 0;
    std::uint64_t seed = 0;
};

// The feature universe for one document: unique words in order of first
// appearance, plus the map back to token positions.
struct WordUniverse {
    std::vector<std::string> words;
    std::vector<std::vector<std::size_t>> positions;  // per word -> token positions
};

WordUniverse word_universe(const std::vector<std::string>& doc_tokens);

// Draws n masks: a uniform drop count in {0..U} followed by a uniform subset
// of that size, with the all-ones mask always included once (first).
std::vector<PerturbationSample> perturb(const WordUniverse& universe, std::size_t n,
                                        std::uint64_t seed);

// Tokens of the document with every masked-out word's positions removed.
std::vector<std::string> apply_mask(const std::vector<std::string>& doc_tokens,
                                    const WordUniverse& universe,
                                    const std::vector<std::uint8_t>& mask);

// Locality-weighted linear regression of model_score on the mask bits with
// greedy forward selection up to k_words, fidelity measured on a seeded 80/20
// split. Accuracy is agreement with the model on which side of the median
// training score a sample falls. Throws config_error on a degenerate design
// (all masks identical) or fewer than 10 samples.
LimeExplanation fit_surrogate(const std::vector<PerturbationSample>& samples,
                              const WordUniverse& universe, std::size_t k_words,
                              double regularization, std::uint64_t seed);

// Words by |weight| descending, lexicographic tie-break. k beyond the fitted
// k_words is rejected: the explanation was not fitted wide enough.
std::vector<std::string> lime_top_terms(const LimeExplanation& explanation, std::size_t k);

struct LimeRecord {
    std::string query_id;
    std::string doc_id;
    std::string model;
    LimeExplanation explanation;
};

// JSONL records {qid, docid, model, weights, intercept, fidelity, seed,
// k_words, config_hash}.
void write_lime_jsonl(std::ostream& out, const LimeRecord& record, const std::string& config_hash);
LimeRecord read_lime_json(const std::string& line);

}  // namespace ranklens
