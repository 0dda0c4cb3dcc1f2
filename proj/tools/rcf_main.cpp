#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rcf/experiment.hpp"

namespace {

struct CommonFlags {
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Path to a JSON config file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", flags.seed, "Root seed (overrides the config)");
    cmd->add_option("--out", flags.out, "Output directory (overrides the config)");
    cmd->add_option("--set", flags.sets,
                    "Override a dotted config key, e.g. --set cf.epochs=50 (repeatable)");
}

rcf::ExperimentConfig resolve(const CommonFlags& flags) {
    return rcf::load_config(flags.config_path, flags.sets, flags.seed, flags.out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Relationship-preserving counterfactual explanation engine"};
    app.require_subcommand(1);

    CommonFlags gen_flags, train_flags, grid_flags, eval_flags, explain_flags, loo_flags;

    CLI::App* gen = app.add_subcommand("gen-data", "Generate or ingest the dataset files");
    add_common(gen, gen_flags);

    CLI::App* train =
        app.add_subcommand("train", "Train classifier, causal VAE and counterfactual engine");
    add_common(train, train_flags);

    CLI::App* grid = app.add_subcommand(
        "grid-search", "Train one engine per grid cell and select by constraint feasibility");
    add_common(grid, grid_flags);

    CLI::App* eval = app.add_subcommand(
        "evaluate", "Generate counterfactuals for the test split and report all metrics");
    add_common(eval, eval_flags);

    std::string record;
    std::string target = "flip";
    CLI::App* explain = app.add_subcommand("explain", "Explain a single record");
    add_common(explain, explain_flags);
    explain->add_option("--record", record, "Comma-separated raw attribute values")->required();
    explain->add_option("--target", target, "Target label: 0, 1 or flip (default)");

    CLI::App* loo = app.add_subcommand(
        "loo-evaluate", "Leave-one-out retraining evaluation for small datasets");
    add_common(loo, loo_flags);

    try {
        app.parse(argc, argv);
        if (gen->parsed()) rcf::cmd_gen_data(resolve(gen_flags));
        if (train->parsed()) rcf::cmd_train(resolve(train_flags));
        if (grid->parsed()) rcf::cmd_grid_search(resolve(grid_flags));
        if (eval->parsed()) rcf::cmd_evaluate(resolve(eval_flags));
        if (explain->parsed()) rcf::cmd_explain(resolve(explain_flags), record, target);
        if (loo->parsed()) rcf::cmd_loo_evaluate(resolve(loo_flags));
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const rcf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const rcf::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const rcf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
