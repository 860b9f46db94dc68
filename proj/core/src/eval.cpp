#include "ranklens/eval.hpp"

#include <algorithm>

namespace ranklens {

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const std::string& w : a) inter += b.count(w);
    std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double recall_at(const std::vector<std::string>& shap_terms, std::size_t k_shap,
                 const std::vector<std::string>& lime_terms, std::size_t k_lime) {
    if (lime_terms.empty()) return 0.0;
    std::set<std::string> shap_top(shap_terms.begin(),
                                   shap_terms.begin() + static_cast<std::ptrdiff_t>(
                                                            std::min(k_shap, shap_terms.size())));
    std::size_t lime_n = std::min(k_lime, lime_terms.size());
    std::size_t hit = 0;
    for (std::size_t i = 0; i < lime_n; ++i) hit += shap_top.count(lime_terms[i]);
    return static_cast<double>(hit) / static_cast<double>(lime_n);
}

JaccardMatrix build_jaccard_matrix(
    const std::map<ReferenceVariant, std::map<InstanceKey, Attribution>>& attributions_by_variant,
    std::size_t k_terms) {
    if (attributions_by_variant.empty()) throw config_error("jaccard matrix: no variants");
    JaccardMatrix m;
    m.k_terms = k_terms;
    for (const auto& [v, inst] : attributions_by_variant) m.variants.push_back(v);

    // All variants must explain the same instances.
    const auto& base = attributions_by_variant.begin()->second;
    for (const auto& [v, inst] : attributions_by_variant) {
        for (const auto& [key, attr] : base) {
            if (!inst.count(key)) {
                throw config_error("jaccard matrix: variant " + to_string(v) +
                                   " is missing instance " + key.first + "/" + key.second);
            }
        }
        for (const auto& [key, attr] : inst) {
            if (!base.count(key)) {
                throw config_error("jaccard matrix: variant " + to_string(m.variants.front()) +
                                   " is missing instance " + key.first + "/" + key.second);
            }
        }
    }
    m.instance_count = base.size();
    if (m.instance_count == 0) throw config_error("jaccard matrix: no instances");

    std::size_t n = m.variants.size();
    // Top-term sets are reused across the n^2 comparisons.
    std::map<ReferenceVariant, std::map<InstanceKey, std::set<std::string>>> tops;
    for (const auto& [v, inst] : attributions_by_variant) {
        for (const auto& [key, attr] : inst) {
            auto terms = top_terms(attr, k_terms);
            tops[v].emplace(key, std::set<std::string>(terms.begin(), terms.end()));
        }
    }

    m.cells.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double total = 0.0;
            const auto& ti = tops.at(m.variants[i]);
            const auto& tj = tops.at(m.variants[j]);
            for (const auto& [key, set_i] : ti) total += jaccard(set_i, tj.at(key));
            m.cells[i][j] = total / static_cast<double>(m.instance_count);
        }
    }
    return m;
}

RecallTable build_recall_table(const std::vector<Attribution>& attributions,
                               const std::vector<LimeRecord>& lime_records,
                               const std::vector<std::size_t>& k_lime_values,
                               const std::vector<std::size_t>& k_shap_values) {
    RecallTable table;
    table.k_lime_values = k_lime_values;
    table.k_shap_values = k_shap_values;

    std::map<std::pair<std::string, InstanceKey>, const LimeRecord*> lime_by_key;
    for (const LimeRecord& r : lime_records) {
        lime_by_key[{r.model, {r.query_id, r.doc_id}}] = &r;
    }

    for (const Attribution& attr : attributions) {
        std::string model = to_string(attr.model);
        auto it = lime_by_key.find({model, {attr.query_id, attr.doc_id}});
        if (it == lime_by_key.end()) {
            throw config_error("recall table: no LIME explanation for " + attr.query_id + "/" +
                               attr.doc_id + " (" + model + ")");
        }
        std::size_t max_shap = *std::max_element(k_shap_values.begin(), k_shap_values.end());
        auto shap_terms = top_terms(attr, max_shap);
        for (std::size_t kl : k_lime_values) {
            auto lime_terms = lime_top_terms(it->second->explanation, kl);
            for (std::size_t ks : k_shap_values) {
                RecallCell& cell = table.cells[model][attr.variant][{kl, ks}];
                cell.mean_recall += recall_at(shap_terms, ks, lime_terms, kl);
                cell.instances += 1;
            }
        }
    }
    for (auto& [model, by_variant] : table.cells) {
        for (auto& [variant, by_k] : by_variant) {
            for (auto& [k, cell] : by_k) {
                if (cell.instances > 0) cell.mean_recall /= static_cast<double>(cell.instances);
            }
        }
    }
    return table;
}

std::map<std::string, LimeFidelity> fidelity_table(const std::vector<LimeRecord>& lime_records) {
    std::map<std::string, LimeFidelity> sums;
    std::map<std::string, std::size_t> counts;
    for (const LimeRecord& r : lime_records) {
        LimeFidelity& f = sums[r.model];
        f.train_mse += r.explanation.fidelity.train_mse;
        f.test_mse += r.explanation.fidelity.test_mse;
        f.train_acc += r.explanation.fidelity.train_acc;
        f.test_acc += r.explanation.fidelity.test_acc;
        counts[r.model] += 1;
    }
    for (auto& [model, f] : sums) {
        auto n = static_cast<double>(counts[model]);
        f.train_mse /= n;
        f.test_mse /= n;
        f.train_acc /= n;
        f.test_acc /= n;
    }
    return sums;
}

}  // namespace ranklens
