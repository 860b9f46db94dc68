#include "ranklens/models.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "ranklens/rng.hpp"

namespace ranklens {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Drmm: return "drmm";
        case ModelKind::MatchPyramid: return "matchpyramid";
        case ModelKind::PacrrDrmm: return "pacrr-drmm";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "drmm") return ModelKind::Drmm;
    if (name == "matchpyramid") return ModelKind::MatchPyramid;
    if (name == "pacrr-drmm") return ModelKind::PacrrDrmm;
    throw config_error("unknown model kind: " + name);
}

OovPolicy policy_for(ModelKind kind) {
    switch (kind) {
        case ModelKind::Drmm: return OovPolicy::Filter;
        case ModelKind::MatchPyramid: return OovPolicy::ZeroVector;
        case ModelKind::PacrrDrmm: return OovPolicy::VocabMean;
    }
    return OovPolicy::Filter;
}

namespace {

ComputeGraph build_drmm_graph(const ModelConfig& c, Rng& rng) {
    ComputeGraph g;
    int hist = g.add_input("histogram");  // (R, bins)
    int h1 = g.add_dense(hist, c.bins, c.drmm_hidden, rng);
    int a1 = g.add_activation(h1, ActKind::Tanh);
    int h2 = g.add_dense(a1, c.drmm_hidden, c.drmm_hidden, rng);
    int a2 = g.add_activation(h2, ActKind::Tanh);
    int z = g.add_dense(a2, c.drmm_hidden, 1, rng);  // (R, 1)

    int ge = g.add_input("gate_embed");  // (R, dim)
    int gl = g.add_dense(ge, c.embedding_dim, 1, rng);
    int gate = g.add_softmax_gate(gl);  // (R)

    int out = g.add_weighted_sum(gate, z);
    g.set_output(out);
    return g;
}

ComputeGraph build_matchpyramid_graph(const ModelConfig& c, Rng& rng) {
    ComputeGraph g;
    std::size_t pool_rows = std::min(c.mp_pool_rows, c.max_query_terms);
    int m = g.add_input("interaction");  // (1, R, W)
    int conv = g.add_conv2d(m, 1, c.mp_filters, c.mp_kernel, c.mp_kernel, rng);
    int act = g.add_activation(conv, ActKind::Relu);
    int pool = g.add_maxpool2d(act, pool_rows, c.mp_pool_cols);  // (F, pr, pc)
    std::size_t flat = c.mp_filters * pool_rows * c.mp_pool_cols;
    int d1 = g.add_dense(pool, flat, c.mp_hidden, rng, /*flatten=*/true);
    int a1 = g.add_activation(d1, ActKind::Tanh);
    int out = g.add_dense(a1, c.mp_hidden, 1, rng);
    g.set_output(out);
    return g;
}

ComputeGraph build_pacrr_graph(const ModelConfig& c, Rng& rng) {
    ComputeGraph g;
    int m = g.add_input("interaction");  // (1, R, W)
    std::vector<int> pooled;
    for (std::size_t ks : c.pacrr_kernel_sizes) {
        int conv = g.add_conv2d(m, 1, 1, ks, ks, rng);
        int act = g.add_activation(conv, ActKind::Relu);
        pooled.push_back(g.add_kmax_pool(act, c.pacrr_kmax));  // (1, R, k)
    }
    int cat = pooled.size() == 1 ? pooled[0] : g.add_concat(pooled);  // (1, R, n*k)
    std::size_t enc = c.pacrr_kernel_sizes.size() * c.pacrr_kmax;
    int d1 = g.add_dense(cat, enc, c.pacrr_hidden, rng);
    int a1 = g.add_activation(d1, ActKind::Relu);
    int z = g.add_dense(a1, c.pacrr_hidden, 1, rng);  // (1, R, 1)

    int ge = g.add_input("gate_embed");
    int gl = g.add_dense(ge, c.embedding_dim, 1, rng);
    int gate = g.add_softmax_gate(gl);

    int out = g.add_weighted_sum(gate, z);
    g.set_output(out);
    return g;
}

}  // namespace

NRModel make_model(ModelKind kind, const ModelConfig& config, std::uint64_t seed) {
    NRModel model;
    model.kind = kind;
    model.policy = policy_for(kind);
    model.config = config;
    model.init_seed = seed;
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(kind) + 101));
    switch (kind) {
        case ModelKind::Drmm: model.graph = build_drmm_graph(config, rng); break;
        case ModelKind::MatchPyramid: model.graph = build_matchpyramid_graph(config, rng); break;
        case ModelKind::PacrrDrmm: model.graph = build_pacrr_graph(config, rng); break;
    }
    return model;
}

NRModel make_model(ModelKind kind, OovPolicy policy, const ModelConfig& config, std::uint64_t seed) {
    if (policy != policy_for(kind)) {
        throw config_error("model " + to_string(kind) + " requires the " +
                           to_string(policy_for(kind)) + " OOV policy, got " + to_string(policy));
    }
    return make_model(kind, config, seed);
}

namespace {

std::vector<std::string> truncate_tokens(const std::vector<std::string>& tokens, std::size_t max_len) {
    if (tokens.size() <= max_len) return tokens;
    return std::vector<std::string>(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(max_len));
}

std::size_t similarity_bin(double sim, std::size_t bins) {
    if (sim >= 1.0 - 1e-9) return bins - 1;  // exact-match bin
    double width = 2.0 / static_cast<double>(bins - 1);
    auto b = static_cast<std::ptrdiff_t>(std::floor((sim + 1.0) / width));
    if (b < 0) b = 0;
    if (b > static_cast<std::ptrdiff_t>(bins - 2)) b = static_cast<std::ptrdiff_t>(bins - 2);
    return static_cast<std::size_t>(b);
}

}  // namespace

Histogram build_histogram(const std::vector<std::string>& query_tokens,
                          const std::vector<std::string>& doc_tokens, const EmbeddingTable& table,
                          const ModelConfig& config, bool allow_empty) {
    if (config.bins < 2) throw config_error("histogram needs at least 2 bins");

    std::vector<std::vector<double>> q_vecs;
    for (const std::string& q : query_tokens) {
        auto v = table.lookup(q, OovPolicy::Filter);
        if (!v) throw unexplainable_error("query term '" + q + "' is out of vocabulary under FILTER");
        q_vecs.push_back(std::move(*v));
    }
    if (q_vecs.empty()) throw unexplainable_error("no usable query terms");

    // FILTER drops OOV document tokens before bucketing.
    std::vector<const std::vector<double>*> d_vecs;
    std::vector<std::size_t> kept_positions;
    std::vector<std::vector<double>> storage;
    storage.reserve(doc_tokens.size());
    for (std::size_t j = 0; j < doc_tokens.size(); ++j) {
        auto v = table.lookup(doc_tokens[j], OovPolicy::Filter);
        if (!v) continue;
        storage.push_back(std::move(*v));
        kept_positions.push_back(j);
    }
    for (const auto& v : storage) d_vecs.push_back(&v);
    if (d_vecs.empty() && !allow_empty) {
        throw unexplainable_error("every document token was filtered as out-of-vocabulary");
    }

    Histogram h;
    h.bins = Tensor({q_vecs.size(), config.bins});
    h.provenance.assign(q_vecs.size(), std::vector<std::vector<std::size_t>>(config.bins));
    for (std::size_t i = 0; i < q_vecs.size(); ++i) {
        for (std::size_t j = 0; j < d_vecs.size(); ++j) {
            double sim = cosine_sim(q_vecs[i], *d_vecs[j]);
            std::size_t b = similarity_bin(sim, config.bins);
            h.bins.at(i, b) += 1.0;
            h.provenance[i][b].push_back(j);  // position within the kept tokens
        }
    }
    if (config.log_counts) {
        for (double& v : h.bins.data) v = std::log(1.0 + v);
    }
    (void)kept_positions;
    return h;
}

InteractionMatrix build_interaction_matrix(const std::vector<std::string>& query_tokens,
                                           const std::vector<std::string>& doc_tokens,
                                           const EmbeddingTable& table, const ModelConfig& config,
                                           OovPolicy policy, std::size_t target_width) {
    if (policy == OovPolicy::Filter) {
        throw config_error("interaction matrices require a vector-valued OOV policy");
    }
    std::vector<std::string> doc = truncate_tokens(doc_tokens, config.max_doc_tokens);
    std::size_t width = target_width != 0 ? target_width : doc.size();
    if (width == 0) width = 1;  // degenerate empty document: one padding column
    if (doc.size() > width) doc.resize(width);

    std::vector<std::vector<double>> q_vecs;
    for (const std::string& q : query_tokens) q_vecs.push_back(*table.lookup(q, policy));

    std::vector<std::vector<double>> d_vecs;
    d_vecs.reserve(width);
    for (std::size_t j = 0; j < doc.size(); ++j) d_vecs.push_back(*table.lookup(doc[j], policy));
    // Padding columns carry the OOV embedding.
    std::vector<double> pad = policy == OovPolicy::VocabMean ? table.mean_vector()
                                                             : std::vector<double>(table.dim(), 0.0);
    for (std::size_t j = doc.size(); j < width; ++j) d_vecs.push_back(pad);

    InteractionMatrix m;
    m.cells = Tensor({q_vecs.size(), width});
    m.pad_mask.assign(width, false);
    for (std::size_t j = doc.size(); j < width; ++j) m.pad_mask[j] = true;
    for (std::size_t i = 0; i < q_vecs.size(); ++i) {
        for (std::size_t j = 0; j < width; ++j) {
            m.cells.at(i, j) = cosine_sim(q_vecs[i], d_vecs[j]);
        }
    }
    return m;
}

EncodedInstance encode_instance(const NRModel& model, const Query& query,
                                const std::vector<std::string>& doc_tokens,
                                const EmbeddingTable& table, std::size_t target_width,
                                bool allow_empty) {
    EncodedInstance enc;
    const ModelConfig& c = model.config;

    std::vector<std::string> q_tokens;
    if (model.policy == OovPolicy::Filter) {
        for (const std::string& t : query.tokens) {
            if (q_tokens.size() == c.max_query_terms) break;
            if (table.contains(t)) q_tokens.push_back(t);
        }
    } else {
        q_tokens = truncate_tokens(query.tokens, c.max_query_terms);
    }
    if (q_tokens.empty()) throw unexplainable_error("query '" + query.query_id + "' has no usable terms");
    enc.query_tokens = q_tokens;

    std::vector<std::string> doc = truncate_tokens(doc_tokens, c.max_doc_tokens);

    if (model.kind == ModelKind::Drmm) {
        enc.histogram_mode = true;
        Histogram h = build_histogram(q_tokens, doc, table, c, allow_empty);
        enc.bin_provenance = std::move(h.provenance);
        enc.inputs.emplace("histogram", std::move(h.bins));
        enc.doc_tokens.clear();
        for (const std::string& t : doc) {
            if (table.contains(t)) enc.doc_tokens.push_back(t);
        }
    } else {
        enc.histogram_mode = false;
        InteractionMatrix m =
            build_interaction_matrix(q_tokens, doc, table, c, model.policy, target_width);
        if (doc.empty() && !allow_empty) {
            throw unexplainable_error("document has no tokens to explain");
        }
        enc.pad_mask = m.pad_mask;
        std::size_t width = m.cells.shape[1];
        enc.inputs.emplace("interaction", Tensor({1, m.cells.shape[0], width}, std::move(m.cells.data)));
        enc.doc_tokens = doc.size() > width
                             ? std::vector<std::string>(doc.begin(), doc.begin() + static_cast<std::ptrdiff_t>(width))
                             : doc;
    }

    if (model.kind != ModelKind::MatchPyramid) {
        Tensor gate({q_tokens.size(), table.dim()});
        for (std::size_t i = 0; i < q_tokens.size(); ++i) {
            auto v = table.lookup(q_tokens[i], model.policy == OovPolicy::Filter
                                                   ? OovPolicy::Filter
                                                   : model.policy);
            if (!v) throw unexplainable_error("gate embedding missing for '" + q_tokens[i] + "'");
            for (std::size_t d = 0; d < table.dim(); ++d) gate.at(i, d) = (*v)[d];
        }
        enc.inputs.emplace("gate_embed", std::move(gate));
    }
    return enc;
}

ScoredInstance score_instance(const NRModel& model, const Query& query,
                              const std::vector<std::string>& doc_tokens,
                              const EmbeddingTable& table, std::size_t target_width,
                              bool allow_empty) {
    ScoredInstance result;
    result.encoded = encode_instance(model, query, doc_tokens, table, target_width, allow_empty);
    result.score = forward(model.graph, result.encoded.inputs, &result.trace);
    return result;
}

double score_only(const NRModel& model, const Query& query,
                  const std::vector<std::string>& doc_tokens, const EmbeddingTable& table) {
    EncodedInstance enc = encode_instance(model, query, doc_tokens, table, 0, /*allow_empty=*/true);
    return forward(model.graph, enc.inputs, nullptr);
}

std::vector<double> attribute_to_tokens(const std::map<std::string, Tensor>& contributions,
                                        const EncodedInstance& encoded) {
    std::vector<double> token_scores(encoded.doc_tokens.size(), 0.0);

    if (encoded.histogram_mode) {
        auto it = contributions.find("histogram");
        if (it == contributions.end()) throw numeric_error("histogram contributions missing");
        const Tensor& cells = it->second;
        std::size_t q_terms = encoded.bin_provenance.size();
        if (cells.rank() != 2 || cells.shape[0] != q_terms ||
            cells.shape[1] != encoded.bin_provenance[0].size()) {
            throw numeric_error("contribution shape does not match histogram provenance");
        }
        for (std::size_t i = 0; i < q_terms; ++i) {
            for (std::size_t b = 0; b < cells.shape[1]; ++b) {
                double c = cells.at(i, b);
                if (c == 0.0) continue;
                const auto& owners = encoded.bin_provenance[i][b];
                if (!owners.empty()) {
                    double share = c / static_cast<double>(owners.size());
                    for (std::size_t pos : owners) token_scores[pos] += share;
                } else {
                    if (token_scores.empty()) {
                        throw numeric_error("contribution mass on an empty document");
                    }
                    double share = c / static_cast<double>(token_scores.size());
                    for (double& v : token_scores) v += share;
                }
            }
        }
    } else {
        auto it = contributions.find("interaction");
        if (it == contributions.end()) throw numeric_error("interaction contributions missing");
        const Tensor& cells = it->second;
        std::size_t width = cells.shape.back();
        if (width != encoded.pad_mask.size()) {
            throw numeric_error("contribution shape does not match matrix provenance");
        }
        std::size_t rows = cells.size() / width;
        double pad_mass = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < width; ++j) {
                double c = cells.data[r * width + j];
                if (encoded.pad_mask[j]) {
                    pad_mass += c;
                } else {
                    token_scores[j] += c;
                }
            }
        }
        // The explained instance never has padding deltas: its columns are
        // real tokens and reference padding matches the instance's own cells.
        if (std::abs(pad_mass) > 1e-9) {
            throw numeric_error("attribution mass landed on padding columns");
        }
    }
    return token_scores;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

std::string serialize_model(const NRModel& model) {
    nlohmann::json j;
    j["format"] = "ranklens-model-v1";
    j["kind"] = to_string(model.kind);
    j["policy"] = to_string(model.policy);
    j["init_seed"] = model.init_seed;
    j["config"] = {{"max_query_terms", model.config.max_query_terms},
                   {"max_doc_tokens", model.config.max_doc_tokens},
                   {"embedding_dim", model.config.embedding_dim},
                   {"bins", model.config.bins},
                   {"log_counts", model.config.log_counts},
                   {"drmm_hidden", model.config.drmm_hidden},
                   {"mp_filters", model.config.mp_filters},
                   {"mp_kernel", model.config.mp_kernel},
                   {"mp_pool_rows", model.config.mp_pool_rows},
                   {"mp_pool_cols", model.config.mp_pool_cols},
                   {"mp_hidden", model.config.mp_hidden},
                   {"pacrr_kernel_sizes", model.config.pacrr_kernel_sizes},
                   {"pacrr_kmax", model.config.pacrr_kmax},
                   {"pacrr_hidden", model.config.pacrr_hidden}};
    j["graph"] = nlohmann::json::parse(serialize_graph(model.graph));
    return j.dump(1);
}

NRModel deserialize_model(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
    if (j.is_discarded() || j.value("format", "") != "ranklens-model-v1") {
        throw config_error("unrecognized model checkpoint format");
    }
    NRModel model;
    model.kind = model_kind_from_string(j.at("kind").get<std::string>());
    model.policy = policy_for(model.kind);
    model.init_seed = j.at("init_seed").get<std::uint64_t>();
    const auto& c = j.at("config");
    model.config.max_query_terms = c.at("max_query_terms").get<std::size_t>();
    model.config.max_doc_tokens = c.at("max_doc_tokens").get<std::size_t>();
    model.config.embedding_dim = c.at("embedding_dim").get<std::size_t>();
    model.config.bins = c.at("bins").get<std::size_t>();
    model.config.log_counts = c.at("log_counts").get<bool>();
    model.config.drmm_hidden = c.at("drmm_hidden").get<std::size_t>();
    model.config.mp_filters = c.at("mp_filters").get<std::size_t>();
    model.config.mp_kernel = c.at("mp_kernel").get<std::size_t>();
    model.config.mp_pool_rows = c.at("mp_pool_rows").get<std::size_t>();
    model.config.mp_pool_cols = c.at("mp_pool_cols").get<std::size_t>();
    model.config.mp_hidden = c.at("mp_hidden").get<std::size_t>();
    model.config.pacrr_kernel_sizes = c.at("pacrr_kernel_sizes").get<std::vector<std::size_t>>();
    model.config.pacrr_kmax = c.at("pacrr_kmax").get<std::size_t>();
    model.config.pacrr_hidden = c.at("pacrr_hidden").get<std::size_t>();
    model.graph = deserialize_graph(j.at("graph").dump());
    return model;
}

}  // namespace ranklens
