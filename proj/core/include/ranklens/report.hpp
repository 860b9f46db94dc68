#pragma once

#include <map>
#include <string>
#include <vector>

#include "ranklens/config.hpp"
#include "ranklens/eval.hpp"

namespace ranklens {

struct ReportBundle {
    std::map<std::string, JaccardMatrix> jaccard_by_model;
    RecallTable recall;
    std::map<std::string, LimeFidelity> fidelity;
    std::string detail_json;                       // full per-instance detail
    std::map<std::string, std::string> heatmaps;   // file name -> html
};

// Aggregates attributions and LIME explanations into the three report shapes
// plus per-instance heatmap pages with a side-by-side word table.
ReportBundle build_report(const std::vector<Attribution>& attributions,
                          const std::vector<LimeRecord>& lime_records, const CorpusIndex& index,
                          const ExperimentConfig& config);

std::string render_jaccard_tsv(const JaccardMatrix& matrix, const std::string& model,
                               const std::string& hash);
std::string render_jaccard_text(const JaccardMatrix& matrix, const std::string& model,
                                const std::string& hash);
std::string render_recall_tsv(const RecallTable& table, const std::string& hash);
std::string render_recall_text(const RecallTable& table, const std::string& hash);
std::string render_fidelity_tsv(const std::map<std::string, LimeFidelity>& fidelity,
                                const std::string& hash);
std::string render_fidelity_text(const std::map<std::string, LimeFidelity>& fidelity,
                                 const std::string& hash);

}  // namespace ranklens
