#include "rcf/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#include "rcf/csv.hpp"
#include "rcf/sha256.hpp"

namespace rcf {

using nlohmann::json;
namespace fs = std::filesystem;

// ---- config ---------------------------------------------------------------------

namespace {

json schema_to_json(const CsvSchema& s) {
    json features = json::array();
    for (const auto& c : s.features) {
        features.push_back({{"name", c.name}, {"zero_is_missing", c.zero_is_missing}});
    }
    return json{{"features", features}, {"label_column", s.label_column}};
}

CsvSchema schema_from_json(const json& j) {
    if (j.contains("preset")) {
        const std::string preset = j.at("preset").get<std::string>();
        if (preset == "pima") return pima_schema();
        throw ConfigError("unknown schema preset '" + preset + "'");
    }
    CsvSchema s;
    for (const auto& f : j.at("features")) {
        s.features.push_back(
            {f.at("name").get<std::string>(), f.value("zero_is_missing", false)});
    }
    s.label_column = j.at("label_column").get<std::string>();
    return s;
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["dataset"] = {{"kind", c.dataset.kind},
                    {"n", c.dataset.n},
                    {"path", c.dataset.path},
                    {"schema", schema_to_json(c.dataset.schema)},
                    {"loo", c.dataset.loo},
                    {"constraints", c.dataset.constraint_specs}};
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["output_dir"] = c.output_dir;
    j["classifier"] = {{"hidden_size", c.classifier.hidden_size},
                       {"learning_rate", c.classifier.learning_rate},
                       {"epochs", c.classifier.epochs},
                       {"batch_size", c.classifier.batch_size},
                       {"patience", c.classifier.patience}};
    j["vae"] = {{"epochs_per_round", c.vae.epochs_per_round},
                {"max_rounds", c.vae.max_rounds},
                {"warmup_epochs", c.vae.warmup_epochs},
                {"batch_size", c.vae.batch_size},
                {"learning_rate", c.vae.learning_rate},
                {"latent_dim", c.vae.latent_dim},
                {"hidden_size", c.vae.hidden_size},
                {"alpha_acyc", c.vae.alpha_acyc},
                {"kl_weight", c.vae.kl_weight},
                {"lambda_init", c.vae.lambda_init},
                {"penalty_init", c.vae.penalty_init},
                {"penalty_growth", c.vae.penalty_growth},
                {"h_tolerance", c.vae.h_tolerance},
                {"shrink_factor", c.vae.shrink_factor}};
    j["cf"] = {{"alpha1", c.cf.alpha1},
               {"alpha2", c.cf.alpha2},
               {"alpha3", c.cf.alpha3},
               {"beta", c.cf.beta},
               {"gamma", c.cf.gamma},
               {"epochs", c.cf.epochs},
               {"batch_size", c.cf.batch_size},
               {"dis_every", c.cf.dis_every},
               {"learning_rate", c.cf.learning_rate_mod},
               {"learning_rate_dis", c.cf.learning_rate_dis},
               {"hidden_size", c.cf.hidden_size}};
    j["baselines"] = {{"lambda", c.baselines.lambda},
                      {"steps", c.baselines.steps},
                      {"learning_rate", c.baselines.learning_rate},
                      {"beta", c.baselines.beta},
                      {"k", c.baselines.k},
                      {"knn_weight", c.baselines.knn_weight}};
    j["grid"] = {{"hidden_size", c.grid.hidden_size},
                 {"learning_rate", c.grid.learning_rate},
                 {"batch_size", c.grid.batch_size},
                 {"epochs", c.grid.epochs}};
    j["loo"] = {{"subsample_folds", c.loo.subsample_folds},
                {"include_baselines", c.loo.include_baselines}};
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    const json& d = j.at("dataset");
    c.dataset.kind = d.at("kind").get<std::string>();
    c.dataset.n = d.at("n").get<int>();
    c.dataset.path = d.value("path", std::string{});
    if (d.contains("schema")) c.dataset.schema = schema_from_json(d.at("schema"));
    c.dataset.loo = d.value("loo", false);
    if (d.contains("constraints")) {
        for (const auto& cs : d.at("constraints")) c.dataset.constraint_specs.push_back(cs);
    }
    c.seed = j.at("seed").get<std::uint64_t>();
    c.jobs = j.at("jobs").get<int>();
    c.output_dir = j.at("output_dir").get<std::string>();

    const json& cl = j.at("classifier");
    c.classifier.hidden_size = cl.at("hidden_size").get<int>();
    c.classifier.learning_rate = cl.at("learning_rate").get<double>();
    c.classifier.epochs = cl.at("epochs").get<int>();
    c.classifier.batch_size = cl.at("batch_size").get<int>();
    c.classifier.patience = cl.at("patience").get<int>();

    const json& v = j.at("vae");
    c.vae.epochs_per_round = v.at("epochs_per_round").get<int>();
    c.vae.max_rounds = v.at("max_rounds").get<int>();
    c.vae.warmup_epochs = v.at("warmup_epochs").get<int>();
    c.vae.batch_size = v.at("batch_size").get<int>();
    c.vae.learning_rate = v.at("learning_rate").get<double>();
    c.vae.latent_dim = v.at("latent_dim").get<int>();
    c.vae.hidden_size = v.at("hidden_size").get<int>();
    c.vae.alpha_acyc = v.at("alpha_acyc").get<double>();
    c.vae.kl_weight = v.at("kl_weight").get<double>();
    c.vae.lambda_init = v.at("lambda_init").get<double>();
    c.vae.penalty_init = v.at("penalty_init").get<double>();
    c.vae.penalty_growth = v.at("penalty_growth").get<double>();
    c.vae.h_tolerance = v.at("h_tolerance").get<double>();
    c.vae.shrink_factor = v.at("shrink_factor").get<double>();

    const json& cf = j.at("cf");
    c.cf.alpha1 = cf.at("alpha1").get<double>();
    c.cf.alpha2 = cf.at("alpha2").get<double>();
    c.cf.alpha3 = cf.at("alpha3").get<double>();
    c.cf.beta = cf.at("beta").get<double>();
    c.cf.gamma = cf.at("gamma").get<double>();
    c.cf.epochs = cf.at("epochs").get<int>();
    c.cf.batch_size = cf.at("batch_size").get<int>();
    c.cf.dis_every = cf.at("dis_every").get<int>();
    c.cf.learning_rate_mod = cf.at("learning_rate").get<double>();
    c.cf.learning_rate_dis = cf.at("learning_rate_dis").get<double>();
    c.cf.hidden_size = cf.at("hidden_size").get<int>();

    const json& b = j.at("baselines");
    c.baselines.lambda = b.at("lambda").get<double>();
    c.baselines.steps = b.at("steps").get<int>();
    c.baselines.learning_rate = b.at("learning_rate").get<double>();
    c.baselines.beta = b.at("beta").get<double>();
    c.baselines.k = b.at("k").get<int>();
    c.baselines.knn_weight = b.at("knn_weight").get<double>();

    const json& g = j.at("grid");
    c.grid.hidden_size = g.at("hidden_size").get<std::vector<int>>();
    c.grid.learning_rate = g.at("learning_rate").get<std::vector<double>>();
    c.grid.batch_size = g.at("batch_size").get<std::vector<int>>();
    c.grid.epochs = g.at("epochs").get<int>();
    if (c.grid.hidden_size.empty() || c.grid.learning_rate.empty() || c.grid.batch_size.empty()) {
        throw ConfigError("grid lists must be non-empty");
    }

    const json& lo = j.at("loo");
    c.loo.subsample_folds = lo.at("subsample_folds").get<int>();
    c.loo.include_baselines = lo.at("include_baselines").get<bool>();

    c.resolved = j;
    return c;
}

void deep_merge(json& base, const json& patch) {
    if (!patch.is_object() || !base.is_object()) {
        base = patch;
        return;
    }
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        if (base.contains(it.key())) {
            deep_merge(base[it.key()], it.value());
        } else {
            base[it.key()] = it.value();
        }
    }
}

void apply_override(json& base, const std::string& setting) {
    const auto eq = setting.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("--set expects key=value, got '" + setting + "'");
    }
    const std::string key = setting.substr(0, eq);
    const std::string value = setting.substr(eq + 1);
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::exception&) {
        parsed = value;  // plain string
    }
    json* node = &base;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
        if (part.empty()) throw ConfigError("--set key has an empty segment: '" + key + "'");
        if (dot == std::string::npos) {
            (*node)[part] = parsed;
            break;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

std::string fmt(double v, const char* spec = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

// Deterministic parallel map: results land in index order; jobs<=1 runs inline.
template <typename Fn>
void run_indexed(int count, int jobs, Fn&& fn) {
    if (jobs <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    const int workers = std::min(jobs, count);
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            int i;
            while ((i = next.fetch_add(1)) < count) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

std::vector<RelationConstraint> resolve_constraints(const std::vector<json>& specs,
                                                    const std::vector<std::string>& names) {
    std::vector<RelationConstraint> out;
    for (const json& s : specs) {
        RelationConstraint c;
        auto index_of = [&](const std::string& n) {
            const auto it = std::find(names.begin(), names.end(), n);
            if (it == names.end()) {
                throw SchemaError("constraint refers to unknown column '" + n + "'");
            }
            return int(it - names.begin());
        };
        c.attr_a = index_of(s.at("a").get<std::string>());
        c.attr_b = index_of(s.at("b").get<std::string>());
        c.sign = s.at("sign").get<int>();
        if (c.sign != 1 && c.sign != -1) throw ConfigError("constraint sign must be +1 or -1");
        c.transform_a = s.value("transform_a", std::string("identity")) == "square"
                            ? RelationConstraint::Transform::square
                            : RelationConstraint::Transform::identity;
        c.description = s.value("description", s.at("a").get<std::string>() + (c.sign > 0 ? " co-moves with " : " counter-moves ") + s.at("b").get<std::string>());
        out.push_back(c);
    }
    return out;
}

struct Paths {
    fs::path root;
    explicit Paths(const ExperimentConfig& c) : root(c.output_dir) {}
    std::string data_dir() const { return (root / "data").string(); }
    std::string models_dir() const { return (root / "models").string(); }
    std::string curves_dir() const { return (root / "curves").string(); }
    std::string eval_dir() const { return (root / "eval").string(); }
    std::string loo_dir() const { return (root / "loo").string(); }
    std::string classifier_file() const { return (root / "models/classifier.json").string(); }
    std::string vae_file() const { return (root / "models/vae.json").string(); }
    std::string engine_file() const { return (root / "models/cf_engine.json").string(); }
};

json base_manifest(const ExperimentConfig& config) {
    json m;
    m["config"] = config.resolved;
    m["config_sha256"] = Sha256::of(config.resolved.dump());
    m["seed"] = config.seed;
    m["stage_seeds"] = {{"dataset", derive_seed(config.seed, "dataset")},
                        {"classifier", derive_seed(config.seed, "classifier")},
                        {"vae", derive_seed(config.seed, "vae")},
                        {"cf", derive_seed(config.seed, "cf")},
                        {"baselines", derive_seed(config.seed, "baselines")},
                        {"loo", derive_seed(config.seed, "loo")}};
    m["excluded_baselines"] = json::array({"CF-VAE", "EB-VAE"});
    m["exclusion_reason"] =
        "external retrained-VAE baselines with manual counterfactual labeling; "
        "not part of this artifact, so comparison tables carry ours, plain_cf and "
        "plain_cf_k only";
    return m;
}

Dataset load_run_dataset(const Paths& paths) { return load_dataset(paths.data_dir()); }

// Queries and flipped targets for a row set.
struct QuerySet {
    Matrix raw;
    std::vector<int> predictions;
    std::vector<int> targets;
};

QuerySet make_queries(const Dataset& data, const std::vector<int>& rows,
                      const ClassifierModel& blackbox) {
    QuerySet q;
    q.raw = data.gather_raw(rows);
    q.predictions = predict(blackbox, data.gather(rows));
    q.targets.resize(q.predictions.size());
    for (std::size_t i = 0; i < q.predictions.size(); ++i) q.targets[i] = 1 - q.predictions[i];
    return q;
}

std::string results_csv(const std::vector<CounterfactualResult>& results,
                        const std::vector<std::string>& names) {
    std::ostringstream os;
    for (const auto& n : names) os << "original_" << n << ",";
    for (const auto& n : names) os << "cf_" << n << ",";
    os << "original_label,target_label,predicted_cf_label,delta_norm\n";
    for (const auto& r : results) {
        for (Eigen::Index j = 0; j < r.original.size(); ++j) os << format_double(r.original(j)) << ",";
        for (Eigen::Index j = 0; j < r.counterfactual.size(); ++j)
            os << format_double(r.counterfactual(j)) << ",";
        os << r.original_label << "," << r.target_label << "," << r.predicted_cf_label << ","
           << format_double(r.delta_norm) << "\n";
    }
    return os.str();
}

std::string arrows_csv(const std::vector<CounterfactualResult>& results, int a, int b) {
    std::ostringstream os;
    os << "x_orig_a,x_orig_b,x_cf_a,x_cf_b,label,target\n";
    for (const auto& r : results) {
        os << format_double(r.original(a)) << "," << format_double(r.original(b)) << ","
           << format_double(r.counterfactual(a)) << "," << format_double(r.counterfactual(b)) << ","
           << r.original_label << "," << r.target_label << "\n";
    }
    return os.str();
}

// 2-D PCA of the standardized originals; projects originals and
// counterfactuals side by side for visual checks.
std::string projection_csv(const std::vector<CounterfactualResult>& results,
                           const Standardizer& standardizer) {
    const Eigen::Index n = Eigen::Index(results.size());
    const Eigen::Index L = results.front().original.size();
    Matrix orig_std(n, L), cf_std(n, L);
    for (Eigen::Index i = 0; i < n; ++i) {
        orig_std.row(i) = standardizer.transform(Matrix(results[std::size_t(i)].original)).row(0);
        cf_std.row(i) = standardizer.transform(Matrix(results[std::size_t(i)].counterfactual)).row(0);
    }
    const Eigen::RowVectorXd mean = orig_std.colwise().mean();
    const Matrix centered = orig_std.rowwise() - mean;
    Eigen::MatrixXd cov = (centered.transpose() * centered) / double(std::max<Eigen::Index>(1, n - 1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    Eigen::MatrixXd basis = eig.eigenvectors().rightCols(2).rowwise().reverse();
    for (int c = 0; c < 2; ++c) {
        Eigen::Index arg = 0;
        basis.col(c).cwiseAbs().maxCoeff(&arg);
        if (basis(arg, c) < 0) basis.col(c) = -basis.col(c);
    }
    std::ostringstream os;
    os << "pc1,pc2,kind,label,target\n";
    auto emit = [&](const Matrix& rows, const char* kind, auto label_of) {
        const Matrix proj = (rows.rowwise() - mean) * basis;
        for (Eigen::Index i = 0; i < proj.rows(); ++i) {
            os << format_double(proj(i, 0)) << "," << format_double(proj(i, 1)) << "," << kind << ","
               << label_of(results[std::size_t(i)]) << "," << results[std::size_t(i)].target_label
               << "\n";
        }
    };
    emit(orig_std, "original", [](const CounterfactualResult& r) { return r.original_label; });
    emit(cf_std, "counterfactual",
         [](const CounterfactualResult& r) { return r.predicted_cf_label; });
    return os.str();
}

std::vector<CounterfactualResult> run_baseline(const ExperimentConfig& config,
                                               const ClassifierModel& blackbox,
                                               const Dataset& data, const QuerySet& queries,
                                               bool with_knn) {
    const Matrix train_std = data.gather(data.split.train);
    const std::vector<int> train_labels = data.gather_labels(data.split.train);
    std::vector<CounterfactualResult> results(queries.targets.size());
    run_indexed(int(queries.targets.size()), config.jobs, [&](int i) {
        const Eigen::RowVectorXd row = queries.raw.row(i);
        results[std::size_t(i)] =
            with_knn ? plain_cf_k(blackbox, data.standardizer, row, queries.targets[std::size_t(i)],
                                  train_std, train_labels, config.baselines)
                     : plain_cf(blackbox, data.standardizer, row, queries.targets[std::size_t(i)],
                                config.baselines);
    });
    return results;
}

}  // namespace

ExperimentConfig default_config() { return config_from_json(config_to_json(ExperimentConfig{})); }

ExperimentConfig load_config(const std::optional<std::string>& path,
                             const std::vector<std::string>& overrides,
                             std::optional<std::uint64_t> seed_flag,
                             std::optional<std::string> out_flag) {
    json merged = config_to_json(ExperimentConfig{});
    if (path) {
        json file;
        try {
            file = json::parse(read_text_file(*path));
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config parse error: ") + e.what());
        }
        deep_merge(merged, file);
    }
    for (const std::string& s : overrides) apply_override(merged, s);
    if (seed_flag) merged["seed"] = *seed_flag;
    if (out_flag) merged["output_dir"] = *out_flag;
    try {
        return config_from_json(merged);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }
}

Dataset build_dataset(const ExperimentConfig& config) {
    const std::uint64_t seed = derive_seed(config.seed, "dataset");
    if (config.dataset.kind == "toy") return generate_toy(config.dataset.n, seed);
    if (config.dataset.kind == "nonlinear") return generate_nonlinear(config.dataset.n, seed);
    if (config.dataset.kind == "csv") {
        if (config.dataset.path.empty()) throw ConfigError("dataset.path required for csv datasets");
        if (!fs::exists(config.dataset.path)) {
            throw IoError("dataset file not found: " + config.dataset.path);
        }
        std::vector<std::string> names;
        for (const auto& f : config.dataset.schema.features) names.push_back(f.name);
        auto constraints = resolve_constraints(config.dataset.constraint_specs, names);
        return ingest_csv(config.dataset.path, config.dataset.schema, seed, config.dataset.loo,
                          std::move(constraints), fs::path(config.dataset.path).stem().string());
    }
    throw ConfigError("unknown dataset.kind '" + config.dataset.kind + "'");
}

void cmd_gen_data(const ExperimentConfig& config) {
    const Paths paths(config);
    const Dataset data = build_dataset(config);
    save_dataset(data, paths.data_dir());

    json manifest = base_manifest(config);
    manifest["command"] = "gen-data";
    manifest["dataset"] = {{"name", data.name},
                           {"num_samples", data.size()},
                           {"num_attributes", data.num_attributes()},
                           {"splits",
                            {{"train", data.split.train.size()},
                             {"val", data.split.val.size()},
                             {"test", data.split.test.size()},
                             {"leave_one_out", data.split.leave_one_out}}},
                           {"positives", std::count(data.labels.begin(), data.labels.end(), 1)},
                           {"notes", data.notes}};
    manifest["outputs"] = {
        {"dataset.csv", sha256_file(paths.data_dir() + "/dataset.csv")},
        {"dataset.meta.json", sha256_file(paths.data_dir() + "/dataset.meta.json")}};
    write_json_file((paths.root / "gen_data_manifest.json").string(), manifest);
}

void cmd_train(const ExperimentConfig& config) {
    const Paths paths(config);
    const Dataset data = load_run_dataset(paths);
    fs::create_directories(paths.models_dir());
    fs::create_directories(paths.curves_dir());

    json manifest = base_manifest(config);
    manifest["command"] = "train";
    json warnings = json::array();

    ClassifierConfig ccfg = config.classifier;
    ccfg.seed = derive_seed(config.seed, "classifier");
    ClassifierReport crep;
    const ClassifierModel blackbox = train_classifier(data, ccfg, &crep);
    save_classifier(blackbox, paths.classifier_file());
    {
        std::ostringstream os;
        os << "epoch,loss\n";
        for (std::size_t e = 0; e < crep.loss_curve.size(); ++e) {
            os << e << "," << format_double(crep.loss_curve[e]) << "\n";
        }
        write_text_file(paths.curves_dir() + "/classifier_curve.csv", os.str());
    }
    manifest["classifier"] = {{"train_accuracy", crep.train_accuracy},
                              {"val_accuracy", crep.val_accuracy},
                              {"test_accuracy", crep.test_accuracy},
                              {"epochs_run", crep.epochs_run}};

    VaeTrainConfig vcfg = config.vae;
    vcfg.seed = derive_seed(config.seed, "vae");
    VaeTrainReport vrep;
    const CausalVae vae = train_vae(data, vcfg, &vrep);
    save_vae(vae, paths.vae_file());
    {
        std::ostringstream os;
        os << "epoch,loss\n";
        for (std::size_t e = 0; e < vrep.loss_per_epoch.size(); ++e) {
            os << e << "," << format_double(vrep.loss_per_epoch[e]) << "\n";
        }
        write_text_file(paths.curves_dir() + "/vae_curve.csv", os.str());
        std::ostringstream rs;
        rs << "round,h,recon_mse\n";
        for (std::size_t r = 0; r < vrep.h_per_round.size(); ++r) {
            rs << r << "," << format_double(vrep.h_per_round[r]) << ","
               << format_double(vrep.recon_mse_per_round[r]) << "\n";
        }
        write_text_file(paths.curves_dir() + "/vae_rounds.csv", rs.str());
    }
    if (!vrep.converged) {
        warnings.push_back("vae acyclicity did not reach tolerance: final h = " +
                           fmt(vrep.final_h, "%.3e"));
    }
    manifest["vae"] = {{"final_h", vrep.final_h},
                       {"converged", vrep.converged},
                       {"rounds_run", vrep.rounds_run},
                       {"skipped_steps", vrep.skipped_steps},
                       {"train_recon_mse",
                        vrep.recon_mse_per_round.empty() ? 0.0 : vrep.recon_mse_per_round.back()}};

    CfTrainConfig fcfg = config.cf;
    fcfg.seed = derive_seed(config.seed, "cf");
    CfTrainReport frep;
    const CfEngine engine = train_cf(vae, blackbox, data, fcfg, &frep);
    save_cf_engine(engine, paths.engine_file());
    {
        std::ostringstream os;
        os << "epoch,total,hinge,nearest,adversarial,discriminator\n";
        for (std::size_t e = 0; e < frep.total_per_epoch.size(); ++e) {
            os << e << "," << format_double(frep.total_per_epoch[e]) << ","
               << format_double(frep.hinge_per_epoch[e]) << ","
               << format_double(frep.nearest_per_epoch[e]) << ","
               << format_double(frep.adversarial_per_epoch[e]) << ","
               << format_double(frep.discriminator_per_epoch[e]) << "\n";
        }
        write_text_file(paths.curves_dir() + "/cf_curve.csv", os.str());
    }
    manifest["cf"] = {{"final_total_loss",
                       frep.total_per_epoch.empty() ? 0.0 : frep.total_per_epoch.back()}};

    manifest["warnings"] = warnings;
    manifest["outputs"] = {{"classifier.json", sha256_file(paths.classifier_file())},
                           {"vae.json", sha256_file(paths.vae_file())},
                           {"cf_engine.json", sha256_file(paths.engine_file())}};
    write_json_file((paths.root / "train_manifest.json").string(), manifest);
}

void cmd_grid_search(const ExperimentConfig& config) {
    const Paths paths(config);
    const Dataset data = load_run_dataset(paths);
    if (data.split.val.empty()) {
        throw DataError("grid-search needs a validation split");
    }
    const ClassifierModel blackbox = load_classifier(paths.classifier_file());
    const CausalVae vae = load_vae(paths.vae_file());

    struct Cell {
        int hidden;
        double lr;
        int batch;
        MetricsReport metrics;
    };
    std::vector<Cell> cells;
    for (int h : config.grid.hidden_size) {
        for (double lr : config.grid.learning_rate) {
            for (int b : config.grid.batch_size) {
                cells.push_back({h, lr, b, {}});
            }
        }
    }

    const QuerySet queries = make_queries(data, data.split.val, blackbox);
    const Matrix reference = data.gather_raw(data.split.val);
    const std::uint64_t cf_seed = derive_seed(config.seed, "cf");

    run_indexed(int(cells.size()), config.jobs, [&](int i) {
        Cell& cell = cells[std::size_t(i)];
        CfTrainConfig fcfg = config.cf;
        fcfg.hidden_size = cell.hidden;
        fcfg.learning_rate_mod = cell.lr;
        fcfg.learning_rate_dis = cell.lr;
        fcfg.batch_size = cell.batch;
        if (config.grid.epochs > 0) fcfg.epochs = config.grid.epochs;
        fcfg.seed = cf_seed;
        const CfEngine engine = train_cf(vae, blackbox, data, fcfg);
        const auto results =
            generate(engine, vae, blackbox, data.standardizer, queries.raw, queries.targets);
        cell.metrics = evaluate_method("grid", results, data.constraints, reference);
    });

    // Maximize constraint feasibility; ties by validity, then lower Mahalanobis.
    int best = 0;
    for (int i = 1; i < int(cells.size()); ++i) {
        const auto& a = cells[std::size_t(i)].metrics;
        const auto& b = cells[std::size_t(best)].metrics;
        const auto key = [](const MetricsReport& m) {
            return std::make_tuple(m.constraint_score, m.validity, -m.mahalanobis_mean);
        };
        if (key(a) > key(b)) best = i;
    }

    std::ostringstream os;
    os << "hidden_size,learning_rate,batch_size,validity,constraint_score,euclidean,mahalanobis,"
          "selected\n";
    for (int i = 0; i < int(cells.size()); ++i) {
        const Cell& c = cells[std::size_t(i)];
        os << c.hidden << "," << format_double(c.lr) << "," << c.batch << ","
           << fmt(c.metrics.validity) << "," << fmt(c.metrics.constraint_score) << ","
           << fmt(c.metrics.euclidean_mean) << "," << fmt(c.metrics.mahalanobis_mean) << ","
           << (i == best ? 1 : 0) << "\n";
    }
    write_text_file((paths.root / "grid_report.csv").string(), os.str());

    json best_cfg = config.resolved.at("cf");
    best_cfg["hidden_size"] = cells[std::size_t(best)].hidden;
    best_cfg["learning_rate"] = cells[std::size_t(best)].lr;
    best_cfg["learning_rate_dis"] = cells[std::size_t(best)].lr;
    best_cfg["batch_size"] = cells[std::size_t(best)].batch;
    json out;
    out["cf"] = best_cfg;
    out["selection"] = {{"constraint_score", cells[std::size_t(best)].metrics.constraint_score},
                        {"validity", cells[std::size_t(best)].metrics.validity},
                        {"mahalanobis", cells[std::size_t(best)].metrics.mahalanobis_mean}};
    write_json_file((paths.root / "best_cf_config.json").string(), out);

    json manifest = base_manifest(config);
    manifest["command"] = "grid-search";
    manifest["cells"] = cells.size();
    manifest["selected"] = {{"hidden_size", cells[std::size_t(best)].hidden},
                            {"learning_rate", cells[std::size_t(best)].lr},
                            {"batch_size", cells[std::size_t(best)].batch}};
    write_json_file((paths.root / "grid_manifest.json").string(), manifest);
}

nlohmann::json metrics_to_json(const MetricsReport& report) {
    return json{{"method", report.method_name},
                {"validity", report.validity},
                {"constraint_score", report.constraint_score},
                {"per_constraint", report.per_constraint},
                {"euclidean_mean", report.euclidean_mean},
                {"mahalanobis_mean", report.mahalanobis_mean},
                {"n_evaluated", report.n_evaluated}};
}

std::string comparison_csv(const std::vector<MetricsReport>& reports) {
    std::ostringstream os;
    os << "method,valid_pct,const_pct,euclidean_dist,mahalanobis_dist\n";
    for (const auto& r : reports) {
        os << r.method_name << "," << fmt(100.0 * r.validity, "%.2f") << ","
           << fmt(100.0 * r.constraint_score, "%.2f") << "," << fmt(r.euclidean_mean, "%.4f") << ","
           << fmt(r.mahalanobis_mean, "%.4f") << "\n";
    }
    return os.str();
}

void cmd_evaluate(const ExperimentConfig& config) {
    const Paths paths(config);
    const Dataset data = load_run_dataset(paths);
    if (data.split.leave_one_out) {
        throw ConfigError("dataset is leave-one-out; use loo-evaluate instead");
    }
    for (const char* f : {"classifier.json", "vae.json", "cf_engine.json"}) {
        if (!fs::exists(paths.models_dir() + "/" + f)) {
            throw IoError(std::string("missing model file ") + f + "; run the train command first");
        }
    }
    const ClassifierModel blackbox = load_classifier(paths.classifier_file());
    const CausalVae vae = load_vae(paths.vae_file());
    const CfEngine engine = load_cf_engine(paths.engine_file());
    fs::create_directories(paths.eval_dir());

    const QuerySet queries = make_queries(data, data.split.test, blackbox);
    const Matrix reference = data.gather_raw(data.split.test);

    struct Method {
        std::string name;
        std::vector<CounterfactualResult> results;
    };
    std::vector<Method> methods;
    methods.push_back(
        {"ours", generate(engine, vae, blackbox, data.standardizer, queries.raw, queries.targets)});
    methods.push_back({"plain_cf", run_baseline(config, blackbox, data, queries, false)});
    methods.push_back({"plain_cf_k", run_baseline(config, blackbox, data, queries, true)});

    std::vector<MetricsReport> reports;
    for (const auto& m : methods) {
        MetricsReport rep = evaluate_method(m.name, m.results, data.constraints, reference);
        reports.push_back(rep);
        write_json_file(paths.eval_dir() + "/metrics_" + m.name + ".json", metrics_to_json(rep));
        write_text_file(paths.eval_dir() + "/results_" + m.name + ".csv",
                        results_csv(m.results, data.feature_names));
        for (const auto& c : data.constraints) {
            const std::string pair_name = data.feature_names[std::size_t(c.attr_a)] + "_" +
                                          data.feature_names[std::size_t(c.attr_b)];
            write_text_file(paths.eval_dir() + "/arrows_" + m.name + "_" + pair_name + ".csv",
                            arrows_csv(m.results, c.attr_a, c.attr_b));
        }
        write_text_file(paths.eval_dir() + "/projection_" + m.name + ".csv",
                        projection_csv(m.results, data.standardizer));
    }
    write_text_file(paths.eval_dir() + "/comparison.csv", comparison_csv(reports));

    json manifest = base_manifest(config);
    manifest["command"] = "evaluate";
    manifest["retrained"] = false;
    manifest["model_hashes"] = {{"classifier.json", sha256_file(paths.classifier_file())},
                                {"vae.json", sha256_file(paths.vae_file())},
                                {"cf_engine.json", sha256_file(paths.engine_file())}};
    json mj = json::object();
    for (const auto& r : reports) mj[r.method_name] = metrics_to_json(r);
    manifest["metrics"] = mj;
    manifest["n_queries"] = queries.targets.size();
    write_json_file(paths.eval_dir() + "/eval_manifest.json", manifest);
}

CounterfactualResult cmd_explain(const ExperimentConfig& config, const std::string& record_csv,
                                 const std::string& target_spec) {
    const Paths paths(config);
    const Dataset data = load_run_dataset(paths);
    const ClassifierModel blackbox = load_classifier(paths.classifier_file());
    const CausalVae vae = load_vae(paths.vae_file());
    const CfEngine engine = load_cf_engine(paths.engine_file());

    std::vector<double> values;
    std::stringstream ss(record_csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto v = parse_cell(cell, 1, "record");
        if (!v) throw SchemaError("record has a missing value: '" + cell + "'");
        values.push_back(*v);
    }
    if (Eigen::Index(values.size()) != data.num_attributes()) {
        throw SchemaError("record has " + std::to_string(values.size()) + " values, schema expects " +
                          std::to_string(data.num_attributes()));
    }
    Matrix x_raw(1, data.num_attributes());
    for (Eigen::Index j = 0; j < x_raw.cols(); ++j) x_raw(0, j) = values[std::size_t(j)];

    const int prediction = predict(blackbox, data.standardizer.transform(x_raw))[0];
    int target = 0;
    if (target_spec == "flip") {
        target = 1 - prediction;
    } else if (target_spec == "0" || target_spec == "1") {
        target = target_spec == "1" ? 1 : 0;
    } else {
        throw ConfigError("--target must be 0, 1 or flip");
    }

    auto results = generate(engine, vae, blackbox, data.standardizer, x_raw, {target});
    CounterfactualResult r = std::move(results.front());
    if (target == prediction) r.note = "no flip requested: target equals the current prediction";

    std::ostringstream os;
    os << "prediction: " << prediction << "   target: " << target
       << "   counterfactual prediction: " << r.predicted_cf_label
       << (r.valid() ? "   [valid]" : "   [NOT valid]") << "\n";
    if (!r.note.empty()) os << "note: " << r.note << "\n";
    os << "\n";
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s %14s %16s %12s\n", "attribute", "original",
                  "counterfactual", "delta");
    os << line;
    for (Eigen::Index j = 0; j < x_raw.cols(); ++j) {
        std::snprintf(line, sizeof(line), "%-16s %14.4f %16.4f %+12.4f\n",
                      data.feature_names[std::size_t(j)].c_str(), r.original(j),
                      r.counterfactual(j), r.counterfactual(j) - r.original(j));
        os << line;
    }
    std::cout << os.str();

    json j;
    j["prediction"] = prediction;
    j["target"] = target;
    j["predicted_cf_label"] = r.predicted_cf_label;
    j["valid"] = r.valid();
    j["note"] = r.note;
    j["delta_norm"] = r.delta_norm;
    j["attributes"] = data.feature_names;
    j["original"] = values;
    std::vector<double> cf(std::size_t(r.counterfactual.size()));
    for (Eigen::Index k = 0; k < r.counterfactual.size(); ++k) cf[std::size_t(k)] = r.counterfactual(k);
    j["counterfactual"] = cf;
    write_json_file((paths.root / "explain.json").string(), j);
    return r;
}

void cmd_loo_evaluate(const ExperimentConfig& config) {
    const Paths paths(config);
    const Dataset data = load_run_dataset(paths);
    if (!data.split.leave_one_out) {
        throw ConfigError("dataset is not leave-one-out; use evaluate instead");
    }
    fs::create_directories(paths.loo_dir());

    const int n = int(data.size());
    std::vector<int> folds(static_cast<std::size_t>(n));
    std::iota(folds.begin(), folds.end(), 0);
    if (config.loo.subsample_folds > 0 && config.loo.subsample_folds < n) {
        Rng rng = Rng(derive_seed(config.seed, "loo")).derive("folds");
        rng.shuffle(folds);
        folds.resize(std::size_t(config.loo.subsample_folds));
        std::sort(folds.begin(), folds.end());
    }

    struct FoldOutcome {
        bool ok = false;
        std::string error;
        CounterfactualResult ours;
        CounterfactualResult plain;
        CounterfactualResult plain_k;
    };
    std::vector<FoldOutcome> outcomes(folds.size());

    run_indexed(int(folds.size()), config.jobs, [&](int fi) {
        const int held_out = folds[std::size_t(fi)];
        FoldOutcome& out = outcomes[std::size_t(fi)];
        try {
            Dataset fold;
            fold.name = data.name + "-fold" + std::to_string(held_out);
            fold.raw_features = data.raw_features;
            fold.labels = data.labels;
            fold.feature_names = data.feature_names;
            fold.constraints = data.constraints;
            fold.seed = data.seed;
            for (int i = 0; i < n; ++i) {
                if (i != held_out) fold.split.train.push_back(i);
            }
            fold.split.test = {held_out};
            fold.standardizer =
                fit_standardizer(fold.raw_features, fold.split.train, fold.feature_names);
            fold.features = fold.standardizer.transform(fold.raw_features);

            const std::uint64_t fold_seed =
                derive_seed(derive_seed(config.seed, "loo"), "fold-" + std::to_string(held_out));
            ClassifierConfig ccfg = config.classifier;
            ccfg.seed = derive_seed(fold_seed, "classifier");
            const ClassifierModel blackbox = train_classifier(fold, ccfg);
            VaeTrainConfig vcfg = config.vae;
            vcfg.seed = derive_seed(fold_seed, "vae");
            const CausalVae vae = train_vae(fold, vcfg);
            CfTrainConfig fcfg = config.cf;
            fcfg.seed = derive_seed(fold_seed, "cf");
            const CfEngine engine = train_cf(vae, blackbox, fold, fcfg);

            const QuerySet q = make_queries(fold, fold.split.test, blackbox);
            out.ours = generate(engine, vae, blackbox, fold.standardizer, q.raw, q.targets).front();
            if (config.loo.include_baselines) {
                const Matrix train_std = fold.gather(fold.split.train);
                const auto train_labels = fold.gather_labels(fold.split.train);
                out.plain = plain_cf(blackbox, fold.standardizer, q.raw.row(0), q.targets[0],
                                     config.baselines);
                out.plain_k = plain_cf_k(blackbox, fold.standardizer, q.raw.row(0), q.targets[0],
                                         train_std, train_labels, config.baselines);
            }
            out.ok = true;
        } catch (const std::exception& e) {
            out.error = e.what();
        }
    });

    std::vector<CounterfactualResult> ours, plain, plain_k;
    int skipped = 0;
    for (const auto& o : outcomes) {
        if (!o.ok) {
            ++skipped;
            continue;
        }
        ours.push_back(o.ours);
        if (config.loo.include_baselines) {
            plain.push_back(o.plain);
            plain_k.push_back(o.plain_k);
        }
    }
    if (ours.empty()) throw DataError("loo-evaluate: every fold failed");

    const Matrix reference = data.raw_features;
    std::vector<MetricsReport> reports;
    reports.push_back(evaluate_method("ours", ours, data.constraints, reference));
    write_json_file(paths.loo_dir() + "/metrics_ours.json", metrics_to_json(reports.back()));
    write_text_file(paths.loo_dir() + "/results_ours.csv", results_csv(ours, data.feature_names));
    if (config.loo.include_baselines) {
        reports.push_back(evaluate_method("plain_cf", plain, data.constraints, reference));
        write_json_file(paths.loo_dir() + "/metrics_plain_cf.json", metrics_to_json(reports.back()));
        reports.push_back(evaluate_method("plain_cf_k", plain_k, data.constraints, reference));
        write_json_file(paths.loo_dir() + "/metrics_plain_cf_k.json",
                        metrics_to_json(reports.back()));
    }
    write_text_file(paths.loo_dir() + "/comparison.csv", comparison_csv(reports));

    std::ostringstream fs_csv;
    fs_csv << "fold,ok,error\n";
    for (std::size_t i = 0; i < folds.size(); ++i) {
        fs_csv << folds[i] << "," << (outcomes[i].ok ? 1 : 0) << ","
               << (outcomes[i].ok ? "" : outcomes[i].error) << "\n";
    }
    write_text_file(paths.loo_dir() + "/folds.csv", fs_csv.str());

    json manifest = base_manifest(config);
    manifest["command"] = "loo-evaluate";
    manifest["total_records"] = n;
    manifest["folds_run"] = folds.size();
    manifest["folds_skipped"] = skipped;
    manifest["subsampled"] = config.loo.subsample_folds > 0 && config.loo.subsample_folds < n;
    json mj = json::object();
    for (const auto& r : reports) mj[r.method_name] = metrics_to_json(r);
    manifest["metrics"] = mj;
    write_json_file((paths.root / "loo_manifest.json").string(), manifest);
}

}  // namespace rcf
