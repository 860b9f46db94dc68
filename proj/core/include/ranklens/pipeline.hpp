#pragma once

#include <string>
#include <vector>

#include "ranklens/config.hpp"
#include "ranklens/deepshap.hpp"
#include "ranklens/eval.hpp"
#include "ranklens/lime.hpp"

namespace ranklens {

// Artifact layout under the configured output directory.
struct PipelinePaths {
    explicit PipelinePaths(std::string root) : root_(std::move(root)) {}
    const std::string& root() const { return root_; }
    std::string index_file() const { return root_ + "/index.json"; }
    std::string model_file(ModelKind kind) const {
        return root_ + "/models/" + to_string(kind) + ".checkpoint.json";
    }
    std::string card_file(ModelKind kind) const {
        return root_ + "/models/" + to_string(kind) + ".card.json";
    }
    std::string run_file() const { return root_ + "/runs/bm25.run"; }
    std::string attributions_file() const { return root_ + "/explain/attributions.jsonl"; }
    std::string lime_file() const { return root_ + "/explain/lime.jsonl"; }
    std::string report_dir() const { return root_ + "/report"; }

  private:
    std::string root_;
};

// Pipeline commands; each is idempotent given identical inputs and seeds and
// throws missing_artifact_error naming the producing command when an
// upstream file is absent.
void cmd_index(const ExperimentConfig& config);
void cmd_train(const ExperimentConfig& config);
void cmd_rank(const ExperimentConfig& config);
void cmd_explain(const ExperimentConfig& config);
void cmd_report(const ExperimentConfig& config);

// Shared loading helpers (also used by tests and the report stage).
CorpusIndex load_index_artifact(const ExperimentConfig& config);
NRModel load_model_artifact(const ExperimentConfig& config, ModelKind kind);
std::vector<Attribution> load_attributions(const std::string& path);
std::vector<LimeRecord> load_lime_records(const std::string& path);

// The embedding table the config describes (seeded over the index vocabulary
// or loaded from a file).
EmbeddingTable build_embedding_table(const ExperimentConfig& config, const CorpusIndex& index);

// Derived per-instance seeds, exposed so tests can reproduce pipeline output.
std::uint64_t lime_instance_seed(const ExperimentConfig& config, const std::string& query_id,
                                 const std::string& doc_id, ModelKind kind);

}  // namespace ranklens
