#pragma once

#include <string>
#include <vector>

#include "ranklens/corpus.hpp"

namespace ranklens::testing {

inline std::string fixture_path(const std::string& name) {
    return std::string(RANKLENS_SOURCE_DIR) + "/tests/fixtures/" + name;
}

inline std::vector<Document> fixture_corpus(std::size_t limit = 0) {
    auto docs = load_corpus_jsonl_file(fixture_path("corpus.jsonl"));
    if (limit != 0 && docs.size() > limit) docs.resize(limit);
    return docs;
}

inline std::vector<Query> fixture_queries() {
    return load_queries_tsv_file(fixture_path("queries.tsv"));
}

inline Document make_doc(const std::string& id, const std::string& text) {
    Document d;
    d.doc_id = id;
    d.raw_text = text;
    d.tokens = tokenize(text);
    return d;
}

}  // namespace ranklens::testing
