#include "ranklens/config.hpp"

#include <cctype>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ranklens/rng.hpp"

namespace ranklens {

namespace {

struct RawValue {
    std::string scalar;
    std::vector<std::string> array;
    bool is_array = false;
};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s, std::size_t line_no) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        return s.substr(1, s.size() - 2);
    }
    if (!s.empty() && s.front() == '"') {
        throw config_error("config line " + std::to_string(line_no) + ": unterminated string");
    }
    return s;
}

std::map<std::string, RawValue> parse_raw(const std::string& text) {
    std::map<std::string, RawValue> out;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // strip comments outside quotes
        bool in_quote = false;
        std::string clean;
        for (char c : line) {
            if (c == '"') in_quote = !in_quote;
            if (c == '#' && !in_quote) break;
            clean.push_back(c);
        }
        clean = trim(clean);
        if (clean.empty()) continue;
        if (clean.front() == '[' && clean.back() == ']' && clean.find('=') == std::string::npos) {
            section = trim(clean.substr(1, clean.size() - 2));
            if (section.empty()) throw config_error("config line " + std::to_string(line_no) + ": empty section");
            continue;
        }
        auto eq = clean.find('=');
        if (eq == std::string::npos) {
            throw config_error("config line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(clean.substr(0, eq));
        std::string value = trim(clean.substr(eq + 1));
        if (key.empty()) throw config_error("config line " + std::to_string(line_no) + ": empty key");
        std::string full = section.empty() ? key : section + "." + key;

        RawValue rv;
        if (!value.empty() && value.front() == '[') {
            if (value.back() != ']') {
                throw config_error("config line " + std::to_string(line_no) + ": unterminated array");
            }
            rv.is_array = true;
            std::string body = value.substr(1, value.size() - 2);
            std::string item;
            bool q = false;
            for (char c : body) {
                if (c == '"') q = !q;
                if (c == ',' && !q) {
                    std::string t = trim(item);
                    if (!t.empty()) rv.array.push_back(unquote(t, line_no));
                    item.clear();
                } else {
                    item.push_back(c);
                }
            }
            std::string t = trim(item);
            if (!t.empty()) rv.array.push_back(unquote(t, line_no));
        } else {
            rv.scalar = unquote(value, line_no);
        }
        out[full] = std::move(rv);
    }
    return out;
}

class ConfigReader {
  public:
    explicit ConfigReader(std::map<std::string, RawValue> raw) : raw_(std::move(raw)) {}

    bool has(const std::string& key) const { return raw_.count(key) != 0; }

    std::string str(const std::string& key, const std::string& fallback) {
        auto it = raw_.find(key);
        if (it == raw_.end()) return fallback;
        mark(key);
        return it->second.scalar;
    }
    std::uint64_t u64(const std::string& key, std::uint64_t fallback) {
        auto it = raw_.find(key);
        if (it == raw_.end()) return fallback;
        mark(key);
        try {
            return std::stoull(it->second.scalar);
        } catch (...) {
            throw config_error("config key " + key + ": expected an integer");
        }
    }
    std::size_t size(const std::string& key, std::size_t fallback) {
        return static_cast<std::size_t>(u64(key, fallback));
    }
    double real(const std::string& key, double fallback) {
        auto it = raw_.find(key);
        if (it == raw_.end()) return fallback;
        mark(key);
        try {
            return std::stod(it->second.scalar);
        } catch (...) {
            throw config_error("config key " + key + ": expected a number");
        }
    }
    bool boolean(const std::string& key, bool fallback) {
        auto it = raw_.find(key);
        if (it == raw_.end()) return fallback;
        mark(key);
        if (it->second.scalar == "true") return true;
        if (it->second.scalar == "false") return false;
        throw config_error("config key " + key + ": expected true or false");
    }
    std::vector<std::string> strings(const std::string& key, std::vector<std::string> fallback) {
        auto it = raw_.find(key);
        if (it == raw_.end()) return fallback;
        mark(key);
        if (!it->second.is_array) return {it->second.scalar};
        return it->second.array;
    }
    std::vector<std::size_t> sizes(const std::string& key, std::vector<std::size_t> fallback) {
        auto it = raw_.find(key);
        if (it == raw_.end()) return fallback;
        mark(key);
        std::vector<std::size_t> out;
        const auto& items = it->second.is_array ? it->second.array
                                                : std::vector<std::string>{it->second.scalar};
        for (const std::string& s : items) {
            try {
                out.push_back(static_cast<std::size_t>(std::stoull(s)));
            } catch (...) {
                throw config_error("config key " + key + ": expected integers");
            }
        }
        return out;
    }

    void check_consumed() const {
        for (const auto& [key, value] : raw_) {
            if (!used_.count(key)) throw config_error("unknown config key: " + key);
        }
    }

  private:
    void mark(const std::string& key) { used_.insert(key); }
    std::map<std::string, RawValue> raw_;
    std::set<std::string> used_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    ConfigReader r(parse_raw(text));
    ExperimentConfig c;

    c.corpus_path = r.str("corpus.docs", "");
    c.queries_path = r.str("corpus.queries", "");
    if (c.corpus_path.empty()) throw config_error("config: corpus.docs is required");
    if (c.queries_path.empty()) throw config_error("config: corpus.queries is required");

    c.embedding_source = r.str("embedding.source", c.embedding_source);
    c.embedding_dim = r.size("embedding.dim", c.embedding_dim);
    c.embedding_seed = r.u64("embedding.seed", c.embedding_seed);

    c.retrieval_depth = r.size("retrieval.depth", c.retrieval_depth);
    c.explain_top = r.size("retrieval.explain_top", c.explain_top);
    if (c.retrieval_depth == 0) throw config_error("config: retrieval.depth must be >= 1");

    std::vector<std::string> kinds = r.strings("models.kinds", {"drmm", "matchpyramid", "pacrr-drmm"});
    c.model_kinds.clear();
    for (const std::string& k : kinds) c.model_kinds.push_back(model_kind_from_string(k));
    if (c.model_kinds.empty()) throw config_error("config: models.kinds must not be empty");

    c.model.embedding_dim = c.embedding_dim;
    c.model.max_query_terms = r.size("models.max_query_terms", c.model.max_query_terms);
    c.model.max_doc_tokens = r.size("models.max_doc_tokens", c.model.max_doc_tokens);
    c.model.bins = r.size("models.drmm_bins", c.model.bins);
    c.model.log_counts = r.boolean("models.drmm_log_counts", c.model.log_counts);
    c.model.drmm_hidden = r.size("models.drmm_hidden", c.model.drmm_hidden);
    c.model.mp_filters = r.size("models.mp_filters", c.model.mp_filters);
    c.model.mp_kernel = r.size("models.mp_kernel", c.model.mp_kernel);
    c.model.mp_pool_rows = r.size("models.mp_pool_rows", c.model.mp_pool_rows);
    c.model.mp_pool_cols = r.size("models.mp_pool_cols", c.model.mp_pool_cols);
    c.model.mp_hidden = r.size("models.mp_hidden", c.model.mp_hidden);
    c.model.pacrr_kernel_sizes = r.sizes("models.pacrr_kernel_sizes", c.model.pacrr_kernel_sizes);
    c.model.pacrr_kmax = r.size("models.pacrr_kmax", c.model.pacrr_kmax);
    c.model.pacrr_hidden = r.size("models.pacrr_hidden", c.model.pacrr_hidden);

    c.train_seed = r.u64("train.seed", c.train_seed);
    c.train_epochs = r.size("train.epochs", c.train_epochs);
    c.train_learning_rate = r.real("train.learning_rate", c.train_learning_rate);
    c.train_margin = r.real("train.margin", c.train_margin);
    c.train_batch = r.size("train.batch", c.train_batch);
    c.train_positives = r.size("train.positives", c.train_positives);
    c.train_negatives_per = r.size("train.negatives_per", c.train_negatives_per);
    if (c.train_batch == 0) throw config_error("config: train.batch must be >= 1");

    std::vector<std::string> variant_names =
        r.strings("reference.variants", {"oov", "idf-low", "ql-low", "collection-rand", "topk-bottom"});
    c.variants.clear();
    for (const std::string& v : variant_names) c.variants.push_back(reference_variant_from_string(v));
    if (c.variants.empty()) throw config_error("config: reference.variants must not be empty");
    c.reference_samples = r.size("reference.n_samples", c.reference_samples);
    c.reference_seed = r.u64("reference.seed", c.reference_seed);
    c.pool_fraction_vocab = r.real("reference.pool_fraction_vocab", c.pool_fraction_vocab);
    c.pool_fraction_topk = r.real("reference.pool_fraction_topk", c.pool_fraction_topk);
    if (!(c.pool_fraction_vocab > 0.0 && c.pool_fraction_vocab <= 1.0) ||
        !(c.pool_fraction_topk > 0.0 && c.pool_fraction_topk <= 1.0)) {
        throw config_error("config: pool fractions must be in (0, 1]");
    }
    if (c.reference_samples == 0) throw config_error("config: reference.n_samples must be >= 1");

    c.lime_samples = r.size("lime.samples", c.lime_samples);
    c.lime_k_words = r.size("lime.k_words", c.lime_k_words);
    c.lime_regularization = r.real("lime.regularization", c.lime_regularization);
    c.lime_seed = r.u64("lime.seed", c.lime_seed);
    if (c.lime_samples < 10) throw config_error("config: lime.samples must be >= 10");

    c.eval_k_terms = r.size("eval.k_terms", c.eval_k_terms);
    c.eval_k_lime = r.sizes("eval.k_lime", c.eval_k_lime);
    c.eval_k_shap = r.sizes("eval.k_shap", c.eval_k_shap);
    for (std::size_t kl : c.eval_k_lime) {
        if (kl > c.lime_k_words) {
            throw config_error("config: eval.k_lime exceeds lime.k_words; fit wider explanations");
        }
    }

    c.output_dir = r.str("output.dir", c.output_dir);
    r.check_consumed();
    return c;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string canonical_config(const ExperimentConfig& c) {
    nlohmann::json j;
    j["corpus"] = {{"docs", c.corpus_path}, {"queries", c.queries_path}};
    j["embedding"] = {{"source", c.embedding_source}, {"dim", c.embedding_dim}, {"seed", c.embedding_seed}};
    j["retrieval"] = {{"depth", c.retrieval_depth}, {"explain_top", c.explain_top}};
    std::vector<std::string> kinds;
    for (ModelKind k : c.model_kinds) kinds.push_back(to_string(k));
    j["models"] = {{"kinds", kinds},
                   {"max_query_terms", c.model.max_query_terms},
                   {"max_doc_tokens", c.model.max_doc_tokens},
                   {"drmm_bins", c.model.bins},
                   {"drmm_log_counts", c.model.log_counts},
                   {"drmm_hidden", c.model.drmm_hidden},
                   {"mp_filters", c.model.mp_filters},
                   {"mp_kernel", c.model.mp_kernel},
                   {"mp_pool_rows", c.model.mp_pool_rows},
                   {"mp_pool_cols", c.model.mp_pool_cols},
                   {"mp_hidden", c.model.mp_hidden},
                   {"pacrr_kernel_sizes", c.model.pacrr_kernel_sizes},
                   {"pacrr_kmax", c.model.pacrr_kmax},
                   {"pacrr_hidden", c.model.pacrr_hidden}};
    j["train"] = {{"seed", c.train_seed},         {"epochs", c.train_epochs},
                  {"learning_rate", c.train_learning_rate}, {"margin", c.train_margin},
                  {"batch", c.train_batch},       {"positives", c.train_positives},
                  {"negatives_per", c.train_negatives_per}};
    std::vector<std::string> variants;
    for (ReferenceVariant v : c.variants) variants.push_back(to_string(v));
    j["reference"] = {{"variants", variants},
                      {"n_samples", c.reference_samples},
                      {"seed", c.reference_seed},
                      {"pool_fraction_vocab", c.pool_fraction_vocab},
                      {"pool_fraction_topk", c.pool_fraction_topk}};
    j["lime"] = {{"samples", c.lime_samples},
                 {"k_words", c.lime_k_words},
                 {"regularization", c.lime_regularization},
                 {"seed", c.lime_seed}};
    j["eval"] = {{"k_terms", c.eval_k_terms}, {"k_lime", c.eval_k_lime}, {"k_shap", c.eval_k_shap}};
    return j.dump();
}

std::string config_hash(const ExperimentConfig& config) {
    std::uint64_t h = fnv1a64(canonical_config(config));
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << h;
    return ss.str();
}

}  // namespace ranklens
