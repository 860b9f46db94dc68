// Command-line driver for the explanation pipeline:
//   ranklens index|train|rank|explain|report --config <file> [overrides]
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ranklens/pipeline.hpp"
#include "ranklens/rng.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> models;
    std::vector<std::string> variants;
    std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--config", opt.config_path, "experiment config file")->required();
    cmd->add_option("--out", opt.out_dir, "output directory (overrides output.dir)");
    cmd->add_option("--seed", opt.seed, "master seed overriding every configured seed");
    cmd->add_option("--model", opt.models, "model kinds to run (overrides models.kinds)")
        ->delimiter(',');
    cmd->add_option("--variant", opt.variants, "reference variants (overrides reference.variants)")
        ->delimiter(',');
}

ranklens::ExperimentConfig resolve(const CliOptions& opt) {
    ranklens::ExperimentConfig config = ranklens::load_config_file(opt.config_path);
    if (!opt.out_dir.empty()) config.output_dir = opt.out_dir;
    if (!opt.models.empty()) {
        config.model_kinds.clear();
        for (const std::string& m : opt.models) {
            config.model_kinds.push_back(ranklens::model_kind_from_string(m));
        }
    }
    if (!opt.variants.empty()) {
        config.variants.clear();
        for (const std::string& v : opt.variants) {
            config.variants.push_back(ranklens::reference_variant_from_string(v));
        }
    }
    if (opt.seed >= 0) {
        auto base = static_cast<std::uint64_t>(opt.seed);
        config.embedding_seed = ranklens::mix_seed(base, 1);
        config.train_seed = ranklens::mix_seed(base, 2);
        config.reference_seed = ranklens::mix_seed(base, 3);
        config.lime_seed = ranklens::mix_seed(base, 4);
    }
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"explanation pipeline for neural retrieval models"};
    app.require_subcommand(1);

    CliOptions opt;
    auto* cmd_index = app.add_subcommand("index", "tokenize and index the corpus");
    auto* cmd_train = app.add_subcommand("train", "train the retrieval models");
    auto* cmd_rank = app.add_subcommand("rank", "write TREC-format runs");
    auto* cmd_explain = app.add_subcommand("explain", "produce attribution and LIME files");
    auto* cmd_report = app.add_subcommand("report", "render tables, matrices, and heatmaps");
    for (CLI::App* cmd : {cmd_index, cmd_train, cmd_rank, cmd_explain, cmd_report}) {
        add_common(cmd, opt);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        ranklens::ExperimentConfig config = resolve(opt);
        if (cmd_index->parsed()) ranklens::cmd_index(config);
        if (cmd_train->parsed()) ranklens::cmd_train(config);
        if (cmd_rank->parsed()) ranklens::cmd_rank(config);
        if (cmd_explain->parsed()) ranklens::cmd_explain(config);
        if (cmd_report->parsed()) ranklens::cmd_report(config);
    } catch (const ranklens::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ranklens::missing_artifact_error& e) {
        std::cerr << "missing artifact: " << e.what() << "\n";
        return 3;
    } catch (const ranklens::numeric_error& e) {
        std::cerr << "numerical invariant failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
