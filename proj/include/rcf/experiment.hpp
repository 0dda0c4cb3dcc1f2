#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcf/baselines.hpp"
#include "rcf/causal_vae.hpp"
#include "rcf/cf_engine.hpp"
#include "rcf/classifier.hpp"
#include "rcf/dataset.hpp"
#include "rcf/metrics.hpp"

namespace rcf {

// Resolved experiment configuration. Loaded from JSON with defaults filled
// in, then overridden by dotted --set keys; every stage derives its seed from
// the one root seed.
struct ExperimentConfig {
    struct DatasetSpec {
        std::string kind = "toy";  // toy | nonlinear | csv
        int n = 20000;
        std::string path;  // csv only
        CsvSchema schema;  // csv only; defaults to the pima preset
        bool loo = false;
        std::vector<nlohmann::json> constraint_specs;  // csv only, by column name
    };

    struct GridSpec {
        std::vector<int> hidden_size = {32, 64};
        std::vector<double> learning_rate = {5e-4, 1e-3, 2e-3};
        std::vector<int> batch_size = {16, 32};
        int epochs = 0;  // 0 -> cf.epochs
    };

    struct LooSpec {
        int subsample_folds = 40;  // 0 disables subsampling (all N folds)
        bool include_baselines = false;
    };

    DatasetSpec dataset;
    std::uint64_t seed = 7;
    int jobs = 1;
    std::string output_dir = "out";
    ClassifierConfig classifier;
    VaeTrainConfig vae;
    CfTrainConfig cf;
    PlainCfConfig baselines;
    GridSpec grid;
    LooSpec loo;

    nlohmann::json resolved;  // the fully merged JSON this config came from
};

ExperimentConfig default_config();
ExperimentConfig load_config(const std::optional<std::string>& path,
                             const std::vector<std::string>& overrides,
                             std::optional<std::uint64_t> seed_flag,
                             std::optional<std::string> out_flag);

// ---- commands -----------------------------------------------------------------
// Every command is a pure function of (config, input files); reruns write
// byte-identical outputs. Paths below are relative to config.output_dir.

// data/dataset.csv + data/dataset.meta.json + gen_data_manifest.json
void cmd_gen_data(const ExperimentConfig& config);

// models/{classifier,vae,cf_engine}.json, curves/*.csv, train_manifest.json
void cmd_train(const ExperimentConfig& config);

// grid_report.csv + best_cf_config.json + grid_manifest.json
void cmd_grid_search(const ExperimentConfig& config);

// eval/metrics_<method>.json, eval/results_<method>.csv, eval/comparison.csv,
// eval/arrows_<method>_<pair>.csv, eval/projection_<method>.csv,
// eval/eval_manifest.json
void cmd_evaluate(const ExperimentConfig& config);

// Single-record explanation; prints a table, writes explain.json.
CounterfactualResult cmd_explain(const ExperimentConfig& config, const std::string& record_csv,
                                 const std::string& target_spec);

// loo/metrics_ours.json (+ baselines when enabled), loo/folds.csv,
// loo_manifest.json
void cmd_loo_evaluate(const ExperimentConfig& config);

// ---- helpers shared with tests --------------------------------------------------

Dataset build_dataset(const ExperimentConfig& config);
std::string comparison_csv(const std::vector<MetricsReport>& reports);
nlohmann::json metrics_to_json(const MetricsReport& report);

}  // namespace rcf
