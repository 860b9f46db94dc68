#include "ranklens/reference.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ranklens/rng.hpp"

namespace ranklens {

std::string to_string(ReferenceVariant variant) {
    switch (variant) {
        case ReferenceVariant::Oov: return "oov";
        case ReferenceVariant::IdfLow: return "idf-low";
        case ReferenceVariant::QlLow: return "ql-low";
        case ReferenceVariant::CollectionRand: return "collection-rand";
        case ReferenceVariant::TopkBottom: return "topk-bottom";
    }
    return "?";
}

ReferenceVariant reference_variant_from_string(const std::string& name) {
    for (ReferenceVariant v : kAllVariants) {
        if (to_string(v) == name) return v;
    }
    throw config_error("unknown reference variant: " + name);
}

namespace {

std::vector<std::string> ranked_pool(std::vector<std::pair<double, std::string>> scored,
                                     double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw config_error("pool fraction must be in (0, 1]");
    }
    std::sort(scored.begin(), scored.end());
    auto cut = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(scored.size())));
    if (cut == 0) cut = 1;
    if (cut > scored.size()) cut = scored.size();
    std::vector<std::string> pool;
    pool.reserve(cut);
    for (std::size_t i = 0; i < cut; ++i) pool.push_back(scored[i].second);
    return pool;
}

// Instance-specific stream: the same spec explains many (query, doc) pairs
// without correlating their samples.
Rng instance_rng(const ReferenceSpec& spec, const Query& query, const Document& doc) {
    std::uint64_t h = fnv1a64(query.query_id + "\x1f" + doc.doc_id + "\x1f" + to_string(spec.variant));
    return Rng(mix_seed(spec.seed, h));
}

}  // namespace

std::vector<std::string> idf_low_pool(const CorpusIndex& index, double fraction) {
    std::vector<std::pair<double, std::string>> scored;
    scored.reserve(index.postings.size());
    for (const auto& [term, plist] : index.postings) {
        scored.emplace_back(idf(term, index), term);
    }
    return ranked_pool(std::move(scored), fraction);
}

std::vector<std::string> ql_low_pool(const CorpusIndex& index, const UnigramLM& lm, double fraction) {
    std::vector<std::pair<double, std::string>> scored;
    scored.reserve(index.postings.size());
    for (const auto& [term, plist] : index.postings) {
        scored.emplace_back(ql_score(term, lm), term);
    }
    return ranked_pool(std::move(scored), fraction);
}

std::vector<ReferenceDoc> build_reference(const ReferenceSpec& spec, const Query& query,
                                          const Document& doc, const CorpusIndex& index,
                                          const RankedList& topk, const UnigramLM* lm) {
    if (spec.n_samples == 0) throw config_error("reference spec needs n_samples >= 1");
    std::size_t n = spec.variant == ReferenceVariant::Oov ? 1 : spec.n_samples;
    std::vector<ReferenceDoc> refs;
    refs.reserve(n);
    Rng rng = instance_rng(spec, query, doc);

    switch (spec.variant) {
        case ReferenceVariant::Oov: {
            ReferenceDoc r;
            r.variant = spec.variant;
            r.tokens.assign(doc.tokens.size(), kOovToken);
            refs.push_back(std::move(r));
            break;
        }
        case ReferenceVariant::IdfLow:
        case ReferenceVariant::QlLow: {
            std::vector<std::string> pool;
            if (spec.variant == ReferenceVariant::IdfLow) {
                pool = idf_low_pool(index, spec.pool_fraction_vocab);
            } else {
                if (lm == nullptr) {
                    throw config_error("ql-low reference requires a language model over the pool");
                }
                pool = ql_low_pool(index, *lm, spec.pool_fraction_vocab);
            }
            for (std::size_t s = 0; s < n; ++s) {
                ReferenceDoc r;
                r.variant = spec.variant;
                r.sample_index = s;
                r.tokens.reserve(doc.tokens.size());
                for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
                    r.tokens.push_back(pool[rng.next_index(pool.size())]);
                }
                refs.push_back(std::move(r));
            }
            break;
        }
        case ReferenceVariant::CollectionRand: {
            std::set<std::string> in_topk;
            for (const RankedEntry& e : topk.entries) in_topk.insert(e.doc_id);
            std::vector<const Document*> candidates;
            for (const auto& [id, d] : index.documents) {
                if (!in_topk.count(id)) candidates.push_back(&d);
            }
            if (candidates.empty()) {
                throw config_error("collection-rand: no documents outside the retrieved pool for query " +
                                   query.query_id);
            }
            auto picks = rng.sample_without_replacement(candidates.size(), n);
            // With more samples than candidates the tail reuses the pool.
            for (std::size_t s = 0; s < n; ++s) {
                const Document* d =
                    s < picks.size() ? candidates[picks[s]] : candidates[rng.next_index(candidates.size())];
                ReferenceDoc r;
                r.variant = spec.variant;
                r.sample_index = s;
                r.source_doc_id = d->doc_id;
                r.tokens = d->tokens;
                refs.push_back(std::move(r));
            }
            break;
        }
        case ReferenceVariant::TopkBottom: {
            if (topk.entries.empty()) {
                throw config_error("topk-bottom: empty ranked list for query " + query.query_id);
            }
            if (!(spec.pool_fraction_topk > 0.0 && spec.pool_fraction_topk <= 1.0)) {
                throw config_error("pool fraction must be in (0, 1]");
            }
            auto cut = static_cast<std::size_t>(
                std::ceil(spec.pool_fraction_topk * static_cast<double>(topk.entries.size())));
            if (cut == 0) cut = 1;
            if (cut > topk.entries.size()) cut = topk.entries.size();
            std::size_t start = topk.entries.size() - cut;
            auto picks = rng.sample_without_replacement(cut, n);
            for (std::size_t s = 0; s < n; ++s) {
                std::size_t slot = s < picks.size() ? picks[s] : rng.next_index(cut);
                const std::string& id = topk.entries[start + slot].doc_id;
                ReferenceDoc r;
                r.variant = spec.variant;
                r.sample_index = s;
                r.source_doc_id = id;
                r.tokens = index.documents.at(id).tokens;
                refs.push_back(std::move(r));
            }
            break;
        }
    }
    return refs;
}

Query fixed_query_reference(const Query& query) { return query; }

}  // namespace ranklens
