#include "ranklens/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace ranklens {

std::vector<std::string> tokenize(const std::string& raw_text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : raw_text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

CorpusIndex build_index(const std::vector<Document>& documents) {
    CorpusIndex index;
    for (const Document& doc : documents) {
        if (index.documents.count(doc.doc_id)) {
            throw config_error("duplicate doc_id: " + doc.doc_id);
        }
        Document stored = doc;
        if (stored.tokens.empty()) stored.tokens = tokenize(stored.raw_text);
        if (stored.tokens.empty()) {
            throw config_error("document tokenizes to nothing: " + doc.doc_id);
        }
        index.doc_lengths[stored.doc_id] = static_cast<std::uint32_t>(stored.tokens.size());
        index.total_tokens += stored.tokens.size();

        std::map<std::string, std::uint32_t> tf;
        for (const std::string& t : stored.tokens) ++tf[t];
        for (const auto& [term, freq] : tf) {
            index.postings[term].push_back({stored.doc_id, freq});
            index.collection_term_counts[term] += freq;
        }
        index.documents.emplace(stored.doc_id, std::move(stored));
    }
    index.doc_count = index.documents.size();
    // Insertion followed a possibly unsorted doc list; postings are kept
    // doc_id ascending so rebuilds serialize identically.
    for (auto& [term, plist] : index.postings) {
        std::sort(plist.begin(), plist.end(),
                  [](const Posting& a, const Posting& b) { return a.doc_id < b.doc_id; });
    }
    return index;
}

double idf(const std::string& term, const CorpusIndex& index) {
    double n = static_cast<double>(index.doc_count);
    double df = static_cast<double>(index.doc_freq(term));
    return std::log((n + 1.0) / (df + 1.0));
}

namespace {
constexpr double kBm25K1 = 1.2;
constexpr double kBm25B = 0.75;
}  // namespace

RankedList retrieve(const Query& query, const CorpusIndex& index, std::size_t k) {
    if (k == 0) throw config_error("retrieve: k must be >= 1");
    RankedList result;
    result.query_id = query.query_id;

    double avgdl = index.avg_doc_length();
    std::unordered_map<std::string, double> scores;
    for (const std::string& term : query.tokens) {
        auto it = index.postings.find(term);
        if (it == index.postings.end()) continue;
        double w = idf(term, index);
        for (const Posting& p : it->second) {
            double tf = static_cast<double>(p.term_freq);
            double dl = static_cast<double>(index.doc_lengths.at(p.doc_id));
            double denom = tf + kBm25K1 * (1.0 - kBm25B + kBm25B * dl / avgdl);
            scores[p.doc_id] += w * tf * (kBm25K1 + 1.0) / denom;
        }
    }
    if (scores.empty()) return result;  // flagged by callers, not fatal

    result.entries.reserve(scores.size());
    for (const auto& [doc_id, score] : scores) result.entries.push_back({doc_id, score});
    std::sort(result.entries.begin(), result.entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    if (result.entries.size() > k) result.entries.resize(k);
    return result;
}

UnigramLM build_lm(const std::vector<std::string>& doc_ids, const CorpusIndex& index, double lambda) {
    if (doc_ids.empty()) throw config_error("build_lm: empty document set");
    if (!(lambda > 0.0 && lambda < 1.0)) throw config_error("build_lm: lambda must be in (0,1)");

    std::map<std::string, std::uint64_t> set_counts;
    std::uint64_t set_total = 0;
    for (const std::string& id : doc_ids) {
        auto it = index.documents.find(id);
        if (it == index.documents.end()) throw config_error("build_lm: unknown doc_id " + id);
        for (const std::string& t : it->second.tokens) {
            ++set_counts[t];
            ++set_total;
        }
    }

    UnigramLM lm;
    lm.smoothing_mass = 1.0 - lambda;
    double coll_total = static_cast<double>(index.total_tokens);
    for (const auto& [term, coll_count] : index.collection_term_counts) {
        double p_docs = 0.0;
        auto it = set_counts.find(term);
        if (it != set_counts.end()) p_docs = static_cast<double>(it->second) / static_cast<double>(set_total);
        double p_coll = static_cast<double>(coll_count) / coll_total;
        lm.probabilities[term] = lambda * p_docs + (1.0 - lambda) * p_coll;
    }
    // Floor for out-of-vocabulary lookups: strictly below any vocabulary term.
    double min_p = 1.0;
    for (const auto& [term, p] : lm.probabilities) min_p = std::min(min_p, p);
    lm.unseen_log_prob = std::log(min_p) - 1.0;
    return lm;
}

double ql_score(const std::string& term, const UnigramLM& lm) {
    auto it = lm.probabilities.find(term);
    if (it == lm.probabilities.end()) return lm.unseen_log_prob;
    return std::log(it->second);
}

std::vector<Document> load_corpus_jsonl(std::istream& in) {
    std::vector<Document> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("id") || !j.contains("text")) {
            throw config_error("corpus jsonl: bad record at line " + std::to_string(line_no));
        }
        Document d;
        d.doc_id = j.at("id").get<std::string>();
        d.raw_text = j.at("text").get<std::string>();
        d.tokens = tokenize(d.raw_text);
        docs.push_back(std::move(d));
    }
    return docs;
}

std::vector<Document> load_corpus_jsonl_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open corpus file: " + path);
    return load_corpus_jsonl(in);
}

std::vector<Query> load_queries_tsv(std::istream& in) {
    std::vector<Query> queries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw config_error("query tsv: missing tab at line " + std::to_string(line_no));
        }
        Query q;
        q.query_id = line.substr(0, tab);
        q.tokens = tokenize(line.substr(tab + 1));
        if (q.tokens.empty()) {
            throw config_error("query tsv: query tokenizes to nothing at line " + std::to_string(line_no));
        }
        queries.push_back(std::move(q));
    }
    return queries;
}

std::vector<Query> load_queries_tsv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open query file: " + path);
    return load_queries_tsv(in);
}

void write_run_file(std::ostream& out, const std::vector<RankedList>& runs, const std::string& tag) {
    for (const RankedList& run : runs) {
        std::size_t rank = 1;
        for (const RankedEntry& e : run.entries) {
            out << run.query_id << " Q0 " << e.doc_id << ' ' << rank << ' '
                << nlohmann::json(e.score).dump() << ' ' << tag << '\n';
            ++rank;
        }
    }
}

std::string serialize_index(const CorpusIndex& index) {
    nlohmann::json j;
    j["format"] = "ranklens-index-v1";
    j["doc_count"] = index.doc_count;
    j["total_tokens"] = index.total_tokens;
    nlohmann::json docs = nlohmann::json::object();
    for (const auto& [id, doc] : index.documents) {
        docs[id] = {{"text", doc.raw_text}, {"tokens", doc.tokens}};
    }
    j["documents"] = std::move(docs);
    nlohmann::json postings = nlohmann::json::object();
    for (const auto& [term, plist] : index.postings) {
        nlohmann::json arr = nlohmann::json::array();
        for (const Posting& p : plist) arr.push_back({{"d", p.doc_id}, {"f", p.term_freq}});
        postings[term] = std::move(arr);
    }
    j["postings"] = std::move(postings);
    return j.dump(1);
}

CorpusIndex deserialize_index(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
    if (j.is_discarded() || j.value("format", "") != "ranklens-index-v1") {
        throw config_error("unrecognized index file format");
    }
    std::vector<Document> docs;
    for (const auto& [id, body] : j.at("documents").items()) {
        Document d;
        d.doc_id = id;
        d.raw_text = body.at("text").get<std::string>();
        d.tokens = body.at("tokens").get<std::vector<std::string>>();
        docs.push_back(std::move(d));
    }
    // Rebuilding from the stored documents regenerates identical statistics;
    // the postings in the file serve readers, not this loader.
    return build_index(docs);
}

}  // namespace ranklens
