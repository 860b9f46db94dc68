#include "ranklens/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace ranklens {

namespace {

std::string fmt(double v, int precision = 4) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(precision) << v;
    return ss.str();
}

std::string provenance_line(const std::string& hash) { return "# config=" + hash + "\n"; }

std::string escape_html(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

// Color intensity follows |score| normalized per explanation; hue encodes
// the sign (warm positive, cool negative).
std::string heat_style(double score, double max_abs) {
    if (max_abs <= 0.0 || score == 0.0) return "";
    double alpha = std::min(1.0, std::abs(score) / max_abs);
    std::ostringstream ss;
    ss << "background-color:rgba(" << (score > 0 ? "217,72,47" : "47,105,217") << ","
       << std::fixed << std::setprecision(3) << 0.12 + 0.75 * alpha << ")";
    return ss.str();
}

}  // namespace

std::string render_jaccard_tsv(const JaccardMatrix& matrix, const std::string& model,
                               const std::string& hash) {
    std::ostringstream out;
    out << provenance_line(hash);
    out << "# model=" << model << " k_terms=" << matrix.k_terms
        << " instances=" << matrix.instance_count << "\n";
    out << "variant";
    for (ReferenceVariant v : matrix.variants) out << '\t' << to_string(v);
    out << '\n';
    for (std::size_t i = 0; i < matrix.variants.size(); ++i) {
        out << to_string(matrix.variants[i]);
        for (std::size_t j = 0; j < matrix.variants.size(); ++j) out << '\t' << fmt(matrix.cells[i][j]);
        out << '\n';
    }
    return out.str();
}

std::string render_jaccard_text(const JaccardMatrix& matrix, const std::string& model,
                                const std::string& hash) {
    std::ostringstream out;
    out << provenance_line(hash);
    out << "Explanation overlap (mean Jaccard of top-" << matrix.k_terms << " terms), model "
        << model << ", " << matrix.instance_count << " instances\n\n";
    out << std::left << std::setw(17) << "";
    for (ReferenceVariant v : matrix.variants) out << std::setw(17) << to_string(v);
    out << '\n';
    for (std::size_t i = 0; i < matrix.variants.size(); ++i) {
        out << std::left << std::setw(17) << to_string(matrix.variants[i]);
        for (std::size_t j = 0; j < matrix.variants.size(); ++j) {
            out << std::setw(17) << fmt(matrix.cells[i][j]);
        }
        out << '\n';
    }
    return out.str();
}

std::string render_recall_tsv(const RecallTable& table, const std::string& hash) {
    std::ostringstream out;
    out << provenance_line(hash);
    out << "model\tvariant";
    for (std::size_t kl : table.k_lime_values) {
        for (std::size_t ks : table.k_shap_values) {
            out << "\ttop-" << kl << "@" << ks;
        }
    }
    out << '\n';
    for (const auto& [model, by_variant] : table.cells) {
        for (const auto& [variant, by_k] : by_variant) {
            out << model << '\t' << to_string(variant);
            for (std::size_t kl : table.k_lime_values) {
                for (std::size_t ks : table.k_shap_values) {
                    out << '\t' << fmt(by_k.at({kl, ks}).mean_recall);
                }
            }
            out << '\n';
        }
    }
    return out.str();
}

std::string render_recall_text(const RecallTable& table, const std::string& hash) {
    std::ostringstream out;
    out << provenance_line(hash);
    out << "Mean recall of LIME top-k terms within the top-k' attribution terms (polarity ignored)\n\n";
    for (const auto& [model, by_variant] : table.cells) {
        out << model << '\n';
        out << "  " << std::left << std::setw(17) << "variant";
        for (std::size_t kl : table.k_lime_values) {
            for (std::size_t ks : table.k_shap_values) {
                std::ostringstream h;
                h << "top-" << kl << "@" << ks;
                out << std::setw(13) << h.str();
            }
        }
        out << '\n';
        for (const auto& [variant, by_k] : by_variant) {
            out << "  " << std::left << std::setw(17) << to_string(variant);
            for (std::size_t kl : table.k_lime_values) {
                for (std::size_t ks : table.k_shap_values) {
                    out << std::setw(13) << fmt(by_k.at({kl, ks}).mean_recall);
                }
            }
            out << '\n';
        }
        out << '\n';
    }
    return out.str();
}

std::string render_fidelity_tsv(const std::map<std::string, LimeFidelity>& fidelity,
                                const std::string& hash) {
    std::ostringstream out;
    out << provenance_line(hash);
    out << "model\ttrain_mse\ttest_mse\ttrain_acc\ttest_acc\n";
    for (const auto& [model, f] : fidelity) {
        out << model << '\t' << fmt(f.train_mse, 5) << '\t' << fmt(f.test_mse, 5) << '\t'
            << fmt(f.train_acc, 5) << '\t' << fmt(f.test_acc, 5) << '\n';
    }
    return out.str();
}

std::string render_fidelity_text(const std::map<std::string, LimeFidelity>& fidelity,
                                 const std::string& hash) {
    std::ostringstream out;
    out << provenance_line(hash);
    out << "Surrogate linear-model fidelity per model\n\n";
    out << std::left << std::setw(15) << "model" << std::setw(12) << "train mse" << std::setw(12)
        << "test mse" << std::setw(12) << "train acc" << std::setw(12) << "test acc" << '\n';
    for (const auto& [model, f] : fidelity) {
        out << std::left << std::setw(15) << model << std::setw(12) << fmt(f.train_mse, 5)
            << std::setw(12) << fmt(f.test_mse, 5) << std::setw(12) << fmt(f.train_acc, 5)
            << std::setw(12) << fmt(f.test_acc, 5) << '\n';
    }
    return out.str();
}

namespace {

std::string render_instance_html(const std::string& query_id, const std::string& doc_id,
                                 const std::string& model, const std::vector<std::string>& query_tokens,
                                 const std::vector<std::string>& doc_tokens,
                                 const std::map<ReferenceVariant, const Attribution*>& variants,
                                 const LimeRecord* lime, std::size_t table_k,
                                 const std::string& hash) {
    std::ostringstream out;
    out << "<!doctype html>\n<html><head><meta charset=\"utf-8\">\n";
    out << "<meta name=\"config-hash\" content=\"" << hash << "\">\n";
    out << "<title>" << escape_html(query_id) << " / " << escape_html(doc_id) << " ("
        << escape_html(model) << ")</title>\n";
    out << "<style>body{font-family:sans-serif;margin:24px;max-width:1100px}"
           ".doc{line-height:1.8;margin:6px 0 18px 0}"
           ".doc span{padding:1px 3px;border-radius:3px;margin:0 1px}"
           "table{border-collapse:collapse}td,th{border:1px solid #bbb;padding:3px 10px}"
           "h3{margin-bottom:2px}</style></head><body>\n";
    out << "<h2>" << escape_html(model) << " &mdash; query <em>"
        << escape_html(query_id) << "</em>, document <em>" << escape_html(doc_id) << "</em></h2>\n";
    out << "<p>query terms: ";
    for (std::size_t i = 0; i < query_tokens.size(); ++i) {
        if (i) out << ' ';
        out << "<strong>" << escape_html(query_tokens[i]) << "</strong>";
    }
    out << "</p>\n";

    for (const auto& [variant, attr] : variants) {
        double max_abs = 0.0;
        for (const auto& [w, v] : attr->token_scores) max_abs = std::max(max_abs, std::abs(v));
        out << "<h3>" << to_string(variant) << "</h3>\n";
        out << "<p style=\"color:#555;margin:2px 0\">score " << fmt(attr->score_input, 5)
            << ", reference mean " << fmt(attr->score_reference_mean, 5) << "</p>\n";
        out << "<div class=\"doc\">";
        for (const std::string& tok : doc_tokens) {
            auto it = attr->token_scores.find(tok);
            double v = it == attr->token_scores.end() ? 0.0 : it->second;
            std::string style = heat_style(v, max_abs);
            if (style.empty()) {
                out << "<span>" << escape_html(tok) << "</span> ";
            } else {
                out << "<span style=\"" << style << "\" title=\"" << fmt(v, 6) << "\">"
                    << escape_html(tok) << "</span> ";
            }
        }
        out << "</div>\n";
    }

    // Side-by-side top-term table; words unique to one column are bolded.
    std::vector<std::pair<std::string, std::vector<std::string>>> columns;
    if (lime != nullptr) {
        std::size_t k = std::min(table_k, lime->explanation.k_words);
        columns.emplace_back("lime", lime_top_terms(lime->explanation, k));
    }
    for (const auto& [variant, attr] : variants) {
        columns.emplace_back(to_string(variant), top_terms(*attr, table_k));
    }
    std::map<std::string, std::size_t> column_presence;
    for (const auto& [name, words] : columns) {
        std::set<std::string> uniq(words.begin(), words.end());
        for (const std::string& w : uniq) column_presence[w] += 1;
    }
    std::size_t rows = 0;
    for (const auto& [name, words] : columns) rows = std::max(rows, words.size());

    out << "<h3>top terms per method</h3>\n<table>\n<tr>";
    for (const auto& [name, words] : columns) out << "<th>" << escape_html(name) << "</th>";
    out << "</tr>\n";
    for (std::size_t r = 0; r < rows; ++r) {
        out << "<tr>";
        for (const auto& [name, words] : columns) {
            out << "<td>";
            if (r < words.size()) {
                bool unique = column_presence[words[r]] == 1;
                if (unique) out << "<strong>";
                out << escape_html(words[r]);
                if (unique) out << "</strong>";
            }
            out << "</td>";
        }
        out << "</tr>\n";
    }
    out << "</table>\n</body></html>\n";
    return out.str();
}

}  // namespace

ReportBundle build_report(const std::vector<Attribution>& attributions,
                          const std::vector<LimeRecord>& lime_records, const CorpusIndex& index,
                          const ExperimentConfig& config) {
    ReportBundle bundle;

    // model -> variant -> instance -> attribution
    std::map<std::string, std::map<ReferenceVariant, std::map<InstanceKey, Attribution>>> grouped;
    for (const Attribution& a : attributions) {
        grouped[to_string(a.model)][a.variant][{a.query_id, a.doc_id}] = a;
    }
    std::map<std::pair<std::string, InstanceKey>, const LimeRecord*> lime_by_key;
    for (const LimeRecord& r : lime_records) lime_by_key[{r.model, {r.query_id, r.doc_id}}] = &r;

    for (const auto& [model, by_variant] : grouped) {
        bundle.jaccard_by_model[model] = build_jaccard_matrix(by_variant, config.eval_k_terms);
    }
    bundle.recall = build_recall_table(attributions, lime_records, config.eval_k_lime, config.eval_k_shap);
    bundle.fidelity = fidelity_table(lime_records);

    // Per-instance detail and heatmaps.
    std::string hash = config_hash(config);
    nlohmann::json detail;
    detail["config_hash"] = hash;
    detail["instances"] = nlohmann::json::array();

    std::map<std::pair<std::string, InstanceKey>, std::map<ReferenceVariant, const Attribution*>> instances;
    for (const Attribution& a : attributions) {
        instances[{to_string(a.model), {a.query_id, a.doc_id}}][a.variant] = &a;
    }

    std::map<std::string, std::vector<std::string>> query_tokens_by_id;
    for (const Query& q : load_queries_tsv_file(config.queries_path)) {
        query_tokens_by_id[q.query_id] = q.tokens;
    }

    for (const auto& [key, variants] : instances) {
        const auto& [model, inst] = key;
        const auto& [query_id, doc_id] = inst;
        auto lime_it = lime_by_key.find(key);
        const LimeRecord* lime = lime_it == lime_by_key.end() ? nullptr : lime_it->second;

        nlohmann::json record;
        record["qid"] = query_id;
        record["docid"] = doc_id;
        record["model"] = model;
        nlohmann::json per_variant = nlohmann::json::object();
        for (const auto& [variant, attr] : variants) {
            per_variant[to_string(variant)] = {
                {"top_terms", top_terms(*attr, config.eval_k_terms)},
                {"score_input", attr->score_input},
                {"score_ref_mean", attr->score_reference_mean},
            };
        }
        record["variants"] = std::move(per_variant);
        nlohmann::json pairwise = nlohmann::json::object();
        for (const auto& [va, attr_a] : variants) {
            auto ta = top_terms(*attr_a, config.eval_k_terms);
            std::set<std::string> sa(ta.begin(), ta.end());
            for (const auto& [vb, attr_b] : variants) {
                auto tb = top_terms(*attr_b, config.eval_k_terms);
                std::set<std::string> sb(tb.begin(), tb.end());
                pairwise[to_string(va) + "|" + to_string(vb)] = jaccard(sa, sb);
            }
        }
        record["jaccard"] = std::move(pairwise);
        if (lime != nullptr) {
            record["lime_terms"] =
                lime_top_terms(lime->explanation, std::min<std::size_t>(config.eval_k_terms,
                                                                        lime->explanation.k_words));
            record["fidelity"] = {{"train_mse", lime->explanation.fidelity.train_mse},
                                  {"test_mse", lime->explanation.fidelity.test_mse},
                                  {"train_acc", lime->explanation.fidelity.train_acc},
                                  {"test_acc", lime->explanation.fidelity.test_acc}};
        }
        detail["instances"].push_back(std::move(record));

        // Heatmap page needs the document tokens; instances whose document
        // left the corpus store are skipped rather than mis-rendered.
        auto doc_it = index.documents.find(doc_id);
        if (doc_it == index.documents.end()) continue;
        std::vector<std::string> doc_tokens = doc_it->second.tokens;
        if (doc_tokens.size() > config.model.max_doc_tokens) {
            doc_tokens.resize(config.model.max_doc_tokens);
        }
        std::vector<std::string> query_tokens;
        auto q_it = query_tokens_by_id.find(query_id);
        if (q_it != query_tokens_by_id.end()) query_tokens = q_it->second;
        std::string name = query_id + "_" + doc_id + "_" + model + ".html";
        bundle.heatmaps[name] = render_instance_html(query_id, doc_id, model, query_tokens,
                                                     doc_tokens, variants, lime, 10, hash);
    }
    bundle.detail_json = detail.dump(1);
    return bundle;
}

}  // namespace ranklens
