#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ranklens/errors.hpp"

namespace ranklens {

struct Document {
    std::string doc_id;
    std::string raw_text;
    std::vector<std::string> tokens;
};

struct Query {
    std::string query_id;
    std::vector<std::string> tokens;
};

struct Posting {
    std::string doc_id;
    std::uint32_t term_freq = 0;
};

// Immutable after build; all maps are ordered so serialization is
// byte-reproducible.
struct CorpusIndex {
    std::map<std::string, std::vector<Posting>> postings;  // term -> docs, doc_id ascending
    std::map<std::string, std::uint64_t> collection_term_counts;
    std::map<std::string, std::uint32_t> doc_lengths;
    std::map<std::string, Document> documents;  // doc store
    std::size_t doc_count = 0;
    std::uint64_t total_tokens = 0;

    double avg_doc_length() const {
        return doc_count == 0 ? 0.0 : static_cast<double>(total_tokens) / static_cast<double>(doc_count);
    }
    std::size_t doc_freq(const std::string& term) const {
        auto it = postings.find(term);
        return it == postings.end() ? 0 : it->second.size();
    }
    bool has_doc(const std::string& doc_id) const { return documents.count(doc_id) != 0; }
};

struct RankedEntry {
    std::string doc_id;
    double score = 0.0;
};

struct RankedList {
    std::string query_id;
    std::vector<RankedEntry> entries;  // descending score, ties doc_id ascending
};

// Unigram model over the index vocabulary, Jelinek-Mercer smoothed against
// the collection model. smoothing_mass is the collection share (1 - lambda).
struct UnigramLM {
    std::map<std::string, double> probabilities;
    double smoothing_mass = 0.1;
    double unseen_log_prob = -60.0;  // floor for terms outside the vocabulary
};

// Lowercase, strip non-alphanumerics to spaces, split on whitespace.
// Deterministic; empty input yields an empty list.
std::vector<std::string> tokenize(const std::string& raw_text);

// Builds the inverted index. Throws config_error naming the offending id on
// duplicate doc_ids. Documents whose text tokenizes to nothing are rejected.
CorpusIndex build_index(const std::vector<Document>& documents);

// idf(t) = ln((N + 1) / (df + 1)); unseen terms get the maximal value.
double idf(const std::string& term, const CorpusIndex& index);

// BM25 top-k retrieval (k1 = 1.2, b = 0.75), ties broken by doc_id ascending.
// A query with no indexed terms returns an empty list.
RankedList retrieve(const Query& query, const CorpusIndex& index, std::size_t k);

// Maximum-likelihood unigram model over the given documents, interpolated
// with the collection model: P(t) = lambda * P_docs(t) + (1 - lambda) * P_coll(t).
UnigramLM build_lm(const std::vector<std::string>& doc_ids, const CorpusIndex& index,
                   double lambda = 0.9);

// log P(term | lm); finite for every term (vocabulary floor for unseen terms).
double ql_score(const std::string& term, const UnigramLM& lm);

// Corpus input: JSONL, one {"id": ..., "text": ...} object per line.
std::vector<Document> load_corpus_jsonl(std::istream& in);
std::vector<Document> load_corpus_jsonl_file(const std::string& path);

// Query input: TSV, query_id <TAB> query text.
std::vector<Query> load_queries_tsv(std::istream& in);
std::vector<Query> load_queries_tsv_file(const std::string& path);

// TREC run format: qid Q0 docid rank score tag.
void write_run_file(std::ostream& out, const std::vector<RankedList>& runs, const std::string& tag);

// Deterministic JSON serialization; rebuilding from the same documents
// round-trips byte-identically.
std::string serialize_index(const CorpusIndex& index);
CorpusIndex deserialize_index(const std::string& json_text);

}  // namespace ranklens
