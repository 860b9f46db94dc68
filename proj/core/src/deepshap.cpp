#include "ranklens/deepshap.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace ranklens {

Attribution explain(const NRModel& model, const Query& query, const Document& doc,
                    const ReferenceSpec& spec, const ExplainContext& context) {
    if (context.index == nullptr || context.topk == nullptr || context.table == nullptr) {
        throw config_error("explain: incomplete context");
    }
    std::vector<ReferenceDoc> refs =
        build_reference(spec, query, doc, *context.index, *context.topk, context.lm);
    Attribution attr = explain_with_references(model, query, doc, refs, *context.table);
    attr.variant = spec.variant;
    attr.seed = spec.seed;
    return attr;
}

Attribution explain_with_references(const NRModel& model, const Query& query, const Document& doc,
                                    const std::vector<ReferenceDoc>& refs,
                                    const EmbeddingTable& table) {
    if (refs.empty()) throw config_error("explain: no reference documents");

    ScoredInstance input = score_instance(model, query, doc.tokens, table);
    std::size_t width = 0;
    if (!input.encoded.histogram_mode) {
        width = input.encoded.inputs.at("interaction").shape.back();
    }

    Attribution attr;
    attr.query_id = query.query_id;
    attr.doc_id = doc.doc_id;
    attr.model = model.kind;
    attr.variant = refs.front().variant;
    attr.score_input = input.score;

    // The query-side reference is the instance's own query; only the document
    // side varies across samples.
    Query ref_query = fixed_query_reference(query);

    double ref_score_sum = 0.0;
    std::map<std::string, double> word_sum;
    for (const ReferenceDoc& ref : refs) {
        ScoredInstance ref_scored = score_instance(model, ref_query, ref.tokens, table,
                                                   width, /*allow_empty=*/true);
        ref_score_sum += ref_scored.score;

        auto contributions = deeplift_contributions(model.graph, input.trace, ref_scored.trace);
        std::vector<double> positional = attribute_to_tokens(contributions, input.encoded);

        double total = 0.0;
        for (double v : positional) total += v;
        double delta = input.score - ref_scored.score;
        if (std::abs(total - delta) > kConservationTol * std::max(1.0, std::abs(input.score))) {
            std::ostringstream diag;
            diag << "conservation violated for " << query.query_id << "/" << doc.doc_id << " ("
                 << to_string(model.kind) << ", " << to_string(ref.variant)
                 << "): sum=" << total << " delta=" << delta;
            throw numeric_error(diag.str());
        }

        // Aggregate positions into unique words by summation.
        std::map<std::string, double> words;
        for (std::size_t j = 0; j < positional.size(); ++j) {
            words[input.encoded.doc_tokens[j]] += positional[j];
        }
        for (const auto& [w, v] : words) word_sum[w] += v;
    }

    double inv_n = 1.0 / static_cast<double>(refs.size());
    for (auto& [w, v] : word_sum) v *= inv_n;
    attr.token_scores = std::move(word_sum);
    attr.score_reference_mean = ref_score_sum * inv_n;

    double total = 0.0;
    for (const auto& [w, v] : attr.token_scores) total += v;
    double delta = attr.score_input - attr.score_reference_mean;
    if (std::abs(total - delta) > kConservationTol * std::max(1.0, std::abs(attr.score_input))) {
        throw numeric_error("conservation violated after sample averaging for " + query.query_id +
                            "/" + doc.doc_id);
    }
    return attr;
}

std::vector<std::string> top_terms(const Attribution& attribution, std::size_t k) {
    if (k == 0) throw config_error("top_terms: k must be >= 1");
    std::vector<std::pair<std::string, double>> terms(attribution.token_scores.begin(),
                                                      attribution.token_scores.end());
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
        double ma = std::abs(a.second), mb = std::abs(b.second);
        if (ma != mb) return ma > mb;
        return a.first < b.first;
    });
    if (terms.size() > k) terms.resize(k);
    std::vector<std::string> words;
    words.reserve(terms.size());
    for (auto& [w, v] : terms) words.push_back(std::move(w));
    return words;
}

void write_attribution_jsonl(std::ostream& out, const Attribution& attribution,
                             const std::string& config_hash) {
    nlohmann::json j;
    j["qid"] = attribution.query_id;
    j["docid"] = attribution.doc_id;
    j["model"] = to_string(attribution.model);
    j["variant"] = to_string(attribution.variant);
    j["scores"] = attribution.token_scores;
    j["score_input"] = attribution.score_input;
    j["score_ref_mean"] = attribution.score_reference_mean;
    j["seed"] = attribution.seed;
    j["config_hash"] = config_hash;
    out << j.dump() << '\n';
}

Attribution read_attribution_json(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line);
    Attribution a;
    a.query_id = j.at("qid").get<std::string>();
    a.doc_id = j.at("docid").get<std::string>();
    a.model = model_kind_from_string(j.at("model").get<std::string>());
    a.variant = reference_variant_from_string(j.at("variant").get<std::string>());
    a.token_scores = j.at("scores").get<std::map<std::string, double>>();
    a.score_input = j.at("score_input").get<double>();
    a.score_reference_mean = j.at("score_ref_mean").get<double>();
    a.seed = j.at("seed").get<std::uint64_t>();
    return a;
}

}  // namespace ranklens
