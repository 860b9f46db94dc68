#include "ranklens/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "ranklens/report.hpp"
#include "ranklens/rng.hpp"

namespace fs = std::filesystem;

namespace ranklens {

namespace {

std::string read_file(const std::string& path, const std::string& producer) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw missing_artifact_error("missing artifact " + path + "; run `" + producer + "` first");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot write " + path);
    out << content;
}

std::vector<Document> load_corpus(const ExperimentConfig& config) {
    return load_corpus_jsonl_file(config.corpus_path);
}

std::vector<Query> load_queries(const ExperimentConfig& config) {
    return load_queries_tsv_file(config.queries_path);
}

}  // namespace

CorpusIndex load_index_artifact(const ExperimentConfig& config) {
    PipelinePaths paths(config.output_dir);
    return deserialize_index(read_file(paths.index_file(), "index"));
}

NRModel load_model_artifact(const ExperimentConfig& config, ModelKind kind) {
    PipelinePaths paths(config.output_dir);
    return deserialize_model(read_file(paths.model_file(kind), "train"));
}

std::vector<Attribution> load_attributions(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw missing_artifact_error("missing artifact " + path + "; run `explain` first");
    std::vector<Attribution> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(read_attribution_json(line));
    }
    return out;
}

std::vector<LimeRecord> load_lime_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw missing_artifact_error("missing artifact " + path + "; run `explain` first");
    std::vector<LimeRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(read_lime_json(line));
    }
    return out;
}

EmbeddingTable build_embedding_table(const ExperimentConfig& config, const CorpusIndex& index) {
    if (config.embedding_source == "seeded") {
        std::vector<std::string> vocabulary;
        vocabulary.reserve(index.postings.size());
        for (const auto& [term, plist] : index.postings) vocabulary.push_back(term);
        return generate_embeddings(vocabulary, config.embedding_dim, config.embedding_seed);
    }
    return load_embeddings_file(config.embedding_source, config.embedding_dim);
}

std::uint64_t lime_instance_seed(const ExperimentConfig& config, const std::string& query_id,
                                 const std::string& doc_id, ModelKind kind) {
    return mix_seed(config.lime_seed,
                    fnv1a64(query_id + "\x1f" + doc_id + "\x1f" + to_string(kind)));
}

// ---------------------------------------------------------------------------
// index
// ---------------------------------------------------------------------------

void cmd_index(const ExperimentConfig& config) {
    std::vector<Document> docs = load_corpus(config);
    std::vector<Query> queries = load_queries(config);  // validated here, used downstream
    if (queries.empty()) throw config_error("query file contains no queries");
    CorpusIndex index = build_index(docs);

    PipelinePaths paths(config.output_dir);
    nlohmann::json j = nlohmann::json::parse(serialize_index(index));
    j["config_hash"] = config_hash(config);
    write_file(paths.index_file(), j.dump(1));
    std::cerr << "indexed " << index.doc_count << " documents, " << index.postings.size()
              << " terms -> " << paths.index_file() << "\n";
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

namespace {

struct TrainingSet {
    std::vector<TrainingPair> pairs;
    std::size_t skipped = 0;
};

TrainingSet build_training_pairs(const NRModel& model, const std::vector<Query>& queries,
                                 const CorpusIndex& index, const EmbeddingTable& table,
                                 const ExperimentConfig& config) {
    TrainingSet set;
    for (const Query& query : queries) {
        RankedList ranked = retrieve(query, index, config.retrieval_depth);
        if (ranked.entries.size() < 2) continue;
        std::size_t n_pos = std::min(config.train_positives, ranked.entries.size() - 1);
        Rng rng(mix_seed(config.train_seed, fnv1a64(query.query_id)));
        for (std::size_t p = 0; p < n_pos; ++p) {
            const std::string& pos_id = ranked.entries[p].doc_id;
            std::size_t tail = ranked.entries.size() - n_pos;
            for (std::size_t nn = 0; nn < config.train_negatives_per && tail > 0; ++nn) {
                std::size_t pick = n_pos + rng.next_index(tail);
                const std::string& neg_id = ranked.entries[pick].doc_id;
                try {
                    TrainingPair pair;
                    pair.relevant =
                        encode_instance(model, query, index.documents.at(pos_id).tokens, table).inputs;
                    pair.non_relevant =
                        encode_instance(model, query, index.documents.at(neg_id).tokens, table).inputs;
                    set.pairs.push_back(std::move(pair));
                } catch (const unexplainable_error&) {
                    ++set.skipped;
                }
            }
        }
    }
    return set;
}

}  // namespace

void cmd_train(const ExperimentConfig& config) {
    CorpusIndex index = load_index_artifact(config);
    std::vector<Query> queries = load_queries(config);
    EmbeddingTable table = build_embedding_table(config, index);
    PipelinePaths paths(config.output_dir);
    std::string hash = config_hash(config);
    std::uint64_t corpus_hash = fnv1a64(read_file(config.corpus_path, "index"));

    for (ModelKind kind : config.model_kinds) {
        ModelConfig mc = config.model;
        mc.embedding_dim = table.dim();
        NRModel model = make_model(kind, mc, config.train_seed);

        TrainingSet set = build_training_pairs(model, queries, index, table, config);
        if (set.pairs.empty()) throw config_error("no usable training pairs for " + to_string(kind));

        TrainOptions options;
        options.learning_rate = config.train_learning_rate;
        options.epochs = config.train_epochs;
        options.margin = config.train_margin;
        options.batch_size = config.train_batch;
        options.seed = mix_seed(config.train_seed, static_cast<std::uint64_t>(kind) + 7);
        TrainStats stats = train_pairwise(model.graph, set.pairs, options);

        write_file(paths.model_file(kind), serialize_model(model));

        nlohmann::json card;
        card["kind"] = to_string(kind);
        card["policy"] = to_string(model.policy);
        card["seed"] = config.train_seed;
        card["config_hash"] = hash;
        card["corpus_hash"] = corpus_hash;
        card["pairs"] = set.pairs.size();
        card["pairs_skipped"] = set.skipped;
        card["epochs"] = config.train_epochs;
        card["loss_curve"] = stats.epoch_loss;
        write_file(paths.card_file(kind), card.dump(1));

        std::cerr << "trained " << to_string(kind) << " on " << set.pairs.size() << " pairs";
        if (!stats.epoch_loss.empty()) {
            std::cerr << " (loss " << stats.epoch_loss.front() << " -> " << stats.epoch_loss.back() << ")";
        }
        std::cerr << "\n";
    }
}

// ---------------------------------------------------------------------------
// rank
// ---------------------------------------------------------------------------

void cmd_rank(const ExperimentConfig& config) {
    CorpusIndex index = load_index_artifact(config);
    std::vector<Query> queries = load_queries(config);
    std::vector<RankedList> runs;
    for (const Query& query : queries) {
        RankedList ranked = retrieve(query, index, config.retrieval_depth);
        if (ranked.entries.empty()) {
            std::cerr << "warning: query " << query.query_id << " matched no documents\n";
        }
        runs.push_back(std::move(ranked));
    }
    PipelinePaths paths(config.output_dir);
    std::ostringstream out;
    // Provenance rides in the run tag; TREC format has no comment lines.
    write_run_file(out, runs, "ranklens-" + config_hash(config).substr(0, 8));
    write_file(paths.run_file(), out.str());
    std::cerr << "wrote " << paths.run_file() << "\n";
}

// ---------------------------------------------------------------------------
// explain
// ---------------------------------------------------------------------------

void cmd_explain(const ExperimentConfig& config) {
    CorpusIndex index = load_index_artifact(config);
    std::vector<Query> queries = load_queries(config);
    EmbeddingTable table = build_embedding_table(config, index);
    PipelinePaths paths(config.output_dir);
    std::string hash = config_hash(config);

    std::vector<NRModel> models;
    for (ModelKind kind : config.model_kinds) models.push_back(load_model_artifact(config, kind));

    std::ostringstream attr_out;
    std::ostringstream lime_out;
    std::size_t explained = 0, skipped = 0;

    for (const Query& query : queries) {
        RankedList topk = retrieve(query, index, config.retrieval_depth);
        if (topk.entries.empty()) {
            std::cerr << "warning: query " << query.query_id << " matched nothing; skipped\n";
            continue;
        }
        std::vector<std::string> pool_ids;
        for (const RankedEntry& e : topk.entries) pool_ids.push_back(e.doc_id);
        UnigramLM lm = build_lm(pool_ids, index);

        std::size_t n_docs = std::min(config.explain_top, topk.entries.size());
        for (std::size_t d = 0; d < n_docs; ++d) {
            const Document& doc = index.documents.at(topk.entries[d].doc_id);
            for (const NRModel& model : models) {
                ExplainContext context{&index, &topk, &lm, &table};
                bool instance_ok = true;
                for (ReferenceVariant variant : config.variants) {
                    ReferenceSpec spec;
                    spec.variant = variant;
                    spec.n_samples = config.reference_samples;
                    spec.seed = config.reference_seed;
                    spec.pool_fraction_vocab = config.pool_fraction_vocab;
                    spec.pool_fraction_topk = config.pool_fraction_topk;
                    try {
                        Attribution attr = explain(model, query, doc, spec, context);
                        write_attribution_jsonl(attr_out, attr, hash);
                        ++explained;
                    } catch (const unexplainable_error& e) {
                        std::cerr << "skipped " << query.query_id << "/" << doc.doc_id << " ("
                                  << to_string(model.kind) << ", " << to_string(variant)
                                  << "): " << e.what() << "\n";
                        ++skipped;
                        instance_ok = false;
                    }
                }

                if (!instance_ok) continue;
                // LIME baseline over the model-visible token sequence.
                std::vector<std::string> doc_tokens = doc.tokens;
                if (doc_tokens.size() > config.model.max_doc_tokens) {
                    doc_tokens.resize(config.model.max_doc_tokens);
                }
                WordUniverse universe = word_universe(doc_tokens);
                std::uint64_t seed = lime_instance_seed(config, query.query_id, doc.doc_id, model.kind);
                auto samples = perturb(universe, config.lime_samples, seed);
                for (PerturbationSample& s : samples) {
                    auto kept = apply_mask(doc_tokens, universe, s.mask);
                    s.model_score = score_only(model, query, kept, table);
                }
                LimeRecord record;
                record.query_id = query.query_id;
                record.doc_id = doc.doc_id;
                record.model = to_string(model.kind);
                record.explanation = fit_surrogate(samples, universe, config.lime_k_words,
                                                   config.lime_regularization, seed);
                write_lime_jsonl(lime_out, record, hash);
            }
        }
    }

    write_file(paths.attributions_file(), attr_out.str());
    write_file(paths.lime_file(), lime_out.str());
    std::cerr << "explained " << explained << " (model, instance, variant) triples";
    if (skipped > 0) std::cerr << ", skipped " << skipped;
    std::cerr << "\n";
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

void cmd_report(const ExperimentConfig& config) {
    PipelinePaths paths(config.output_dir);
    CorpusIndex index = load_index_artifact(config);
    std::vector<Attribution> attributions = load_attributions(paths.attributions_file());
    std::vector<LimeRecord> lime_records = load_lime_records(paths.lime_file());
    if (attributions.empty()) {
        throw missing_artifact_error("attribution file is empty; run `explain` first");
    }
    std::string hash = config_hash(config);

    ReportBundle bundle = build_report(attributions, lime_records, index, config);

    for (const auto& [model, matrix] : bundle.jaccard_by_model) {
        write_file(paths.report_dir() + "/fig1_" + model + ".tsv",
                   render_jaccard_tsv(matrix, model, hash));
        write_file(paths.report_dir() + "/fig1_" + model + ".txt",
                   render_jaccard_text(matrix, model, hash));
    }
    write_file(paths.report_dir() + "/table1.tsv", render_recall_tsv(bundle.recall, hash));
    write_file(paths.report_dir() + "/table1.txt", render_recall_text(bundle.recall, hash));
    write_file(paths.report_dir() + "/table2.tsv", render_fidelity_tsv(bundle.fidelity, hash));
    write_file(paths.report_dir() + "/table2.txt", render_fidelity_text(bundle.fidelity, hash));
    write_file(paths.report_dir() + "/report.json", bundle.detail_json);
    for (const auto& [name, html] : bundle.heatmaps) {
        write_file(paths.report_dir() + "/heatmaps/" + name, html);
    }
    std::cerr << "report written to " << paths.report_dir() << "\n";
}

}  // namespace ranklens
