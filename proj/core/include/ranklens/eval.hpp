#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "ranklens/deepshap.hpp"
#include "ranklens/lime.hpp"

namespace ranklens {

// One explanation term list keyed by the instance it explains. Ordering is
// the source's magnitude ordering; no duplicates.
struct ExplanationSet {
    std::string query_id;
    std::string doc_id;
    std::string model;
    std::string source;  // variant tag or "lime"
    std::vector<std::string> words;
};

// |a n b| / |a u b|; both empty counts as identical (1).
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

// |top-k_shap(shap) n top-k_lime(lime)| / min(k_lime, |lime|). Lists must be
// magnitude-ordered and duplicate-free.
double recall_at(const std::vector<std::string>& shap_terms, std::size_t k_shap,
                 const std::vector<std::string>& lime_terms, std::size_t k_lime);

// Variant-pair mean Jaccard overlaps of top-k_terms sets for one model.
struct JaccardMatrix {
    std::vector<ReferenceVariant> variants;
    std::vector<std::vector<double>> cells;  // symmetric, diagonal 1
    std::size_t k_terms = 0;
    std::size_t instance_count = 0;
};

using InstanceKey = std::pair<std::string, std::string>;  // (query_id, doc_id)

// attributions_by_variant: variant -> instance -> Attribution, one model.
// Every variant must cover the same instance set; a gap is reported by name.
JaccardMatrix build_jaccard_matrix(
    const std::map<ReferenceVariant, std::map<InstanceKey, Attribution>>& attributions_by_variant,
    std::size_t k_terms);

struct RecallCell {
    double mean_recall = 0.0;
    std::size_t instances = 0;
};

// (model, variant, k_lime, k_shap) -> mean recall over aligned instances.
struct RecallTable {
    std::vector<std::size_t> k_lime_values;
    std::vector<std::size_t> k_shap_values;
    std::map<std::string, std::map<ReferenceVariant, std::map<std::pair<std::size_t, std::size_t>, RecallCell>>>
        cells;  // model -> variant -> (k_lime, k_shap)
};

RecallTable build_recall_table(const std::vector<Attribution>& attributions,
                               const std::vector<LimeRecord>& lime_records,
                               const std::vector<std::size_t>& k_lime_values,
                               const std::vector<std::size_t>& k_shap_values);

// Per-model means of the surrogate fidelity numbers.
std::map<std::string, LimeFidelity> fidelity_table(const std::vector<LimeRecord>& lime_records);

}  // namespace ranklens
