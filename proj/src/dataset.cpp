#include "rcf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "rcf/csv.hpp"
#include "rcf/sha256.hpp"

namespace rcf {

using nlohmann::json;

// ---- Standardizer -----------------------------------------------------------

Matrix Standardizer::transform(const Matrix& raw) const {
    if (raw.cols() != mean.size()) {
        throw ShapeError("standardize: " + std::to_string(raw.cols()) + " columns, stats have " +
                         std::to_string(mean.size()));
    }
    return ((raw.rowwise() - mean.transpose()).array().rowwise() /
            stdev.transpose().array())
        .matrix();
}

Matrix Standardizer::inverse(const Matrix& standardized) const {
    if (standardized.cols() != mean.size()) {
        throw ShapeError("destandardize: " + std::to_string(standardized.cols()) +
                         " columns, stats have " + std::to_string(mean.size()));
    }
    return ((standardized.array().rowwise() * stdev.transpose().array()).rowwise() +
            mean.transpose().array())
        .matrix();
}

std::string Standardizer::fingerprint() const {
    std::string blob;
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
        blob += format_double(mean(i)) + "," + format_double(stdev(i)) + ";";
    }
    return Sha256::of(blob).substr(0, 16);
}

Standardizer fit_standardizer(const Matrix& raw, const std::vector<int>& rows,
                               const std::vector<std::string>& names) {
    if (rows.empty()) throw DataError("standardizer: no rows to fit on");
    const Eigen::Index L = raw.cols();
    Standardizer s;
    s.mean = Eigen::VectorXd::Zero(L);
    s.stdev = Eigen::VectorXd::Zero(L);
    for (int r : rows) s.mean += raw.row(r).transpose();
    s.mean /= double(rows.size());
    for (int r : rows) {
        s.stdev.array() += (raw.row(r).transpose() - s.mean).array().square();
    }
    s.stdev = (s.stdev / double(rows.size())).cwiseSqrt();
    for (Eigen::Index j = 0; j < L; ++j) {
        if (!(s.stdev(j) > 1e-12)) {
            const std::string col = j < Eigen::Index(names.size()) ? names[j] : std::to_string(j);
            throw DataError("constant feature '" + col + "' has zero standard deviation");
        }
    }
    return s;
}

// ---- Dataset ---------------------------------------------------------------

Matrix Dataset::gather(const std::vector<int>& rows) const {
    Matrix out(Eigen::Index(rows.size()), features.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(Eigen::Index(i)) = features.row(rows[i]);
    return out;
}

Matrix Dataset::gather_raw(const std::vector<int>& rows) const {
    Matrix out(Eigen::Index(rows.size()), raw_features.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(Eigen::Index(i)) = raw_features.row(rows[i]);
    return out;
}

std::vector<int> Dataset::gather_labels(const std::vector<int>& rows) const {
    std::vector<int> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = labels[std::size_t(rows[i])];
    return out;
}

// ---- SEM -------------------------------------------------------------------

SemSpec::Draw SemSpec::evaluate(const Eigen::VectorXd& noise) const {
    const int L = num_attributes();
    if (noise.size() != L) {
        throw ShapeError("SemSpec::evaluate: expected " + std::to_string(L) + " noise draws");
    }
    Draw d;
    d.sample = Eigen::VectorXd::Zero(L);
    d.skeleton = Eigen::VectorXd::Zero(L);
    for (int j = 0; j < L; ++j) {
        const auto& node = nodes[std::size_t(j)];
        d.sample(j) = node.equation(d.sample, noise(j));
        d.skeleton(j) = node.equation(d.skeleton, node.is_root ? noise(j) : 0.0);
    }
    d.label = label_rule(d.skeleton);
    return d;
}

SemSpec toy_sem() {
    SemSpec sem;
    sem.nodes.resize(5);
    sem.nodes[0] = {[](const Eigen::VectorXd&, double u) { return u; }, 0.0, 0.5, true};
    sem.nodes[1] = {[](const Eigen::VectorXd&, double u) { return u; }, 0.0, 0.5, true};
    sem.nodes[2] = {[](const Eigen::VectorXd& v, double u) { return 2.0 * v(0) - v(1) + u; },
                    0.0, 0.5, false};
    sem.nodes[3] = {[](const Eigen::VectorXd& v, double u) { return -2.0 * v(2) + u; },
                    0.0, 0.5, false};
    sem.nodes[4] = {[](const Eigen::VectorXd& v, double u) { return std::sin(v(2)) + u; },
                    0.0, 0.5, false};
    sem.label_rule = [](const Eigen::VectorXd& skeleton) {
        int hits = 0;
        for (Eigen::Index j = 0; j < skeleton.size(); ++j) {
            if (std::sin(skeleton(j)) > 0.5) ++hits;
        }
        return hits > 2 ? 1 : 0;
    };
    return sem;
}

SemSpec nonlinear_sem() {
    SemSpec sem;
    sem.nodes.resize(5);
    sem.nodes[0] = {[](const Eigen::VectorXd&, double u) { return u; }, 2.0, 0.5, true};
    sem.nodes[1] = {[](const Eigen::VectorXd& v, double u) { return v(0) * v(0) + u; },
                    0.0, 0.25, false};
    sem.nodes[2] = {[](const Eigen::VectorXd& v, double u) { return std::sin(-2.0 * v(0)) + u; },
                    0.0, 1.0, false};
    sem.nodes[3] = {[](const Eigen::VectorXd&, double u) { return u; }, 1.0, 1.0, true};
    // Exponent input clamped to [-6, 6]; rare N(1,1) tails would otherwise
    // dominate standardization.
    sem.nodes[4] = {[](const Eigen::VectorXd& v, double u) {
                        const double x4 = std::clamp(v(3), -6.0, 6.0);
                        return std::exp(1.5 * x4) + 2.0 + u;
                    },
                    0.0, 1.0, false};
    sem.label_rule = [](const Eigen::VectorXd& skeleton) {
        for (Eigen::Index j = 0; j < skeleton.size(); ++j) {
            if (!(std::sin(skeleton(j)) > 0.0)) return 0;
        }
        return 1;
    };
    return sem;
}

// ---- generation -------------------------------------------------------------

namespace {

Splits make_splits(int n, Rng& rng) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const int n_test = n / 10;
    const int n_val = n / 10;
    Splits s;
    s.test.assign(order.begin(), order.begin() + n_test);
    s.val.assign(order.begin() + n_test, order.begin() + n_test + n_val);
    s.train.assign(order.begin() + n_test + n_val, order.end());
    return s;
}

Dataset from_sem(const SemSpec& sem, const std::string& name, int n, std::uint64_t seed,
                 std::vector<RelationConstraint> constraints, std::vector<std::string> notes) {
    if (n <= 0) throw DataError("dataset size must be positive");
    const int L = sem.num_attributes();
    Dataset data;
    data.name = name;
    data.seed = seed;
    data.raw_features.resize(n, L);
    data.labels.resize(std::size_t(n));
    data.feature_names.reserve(std::size_t(L));
    for (int j = 1; j <= L; ++j) data.feature_names.push_back("X" + std::to_string(j));

    Rng noise_rng = Rng(seed).derive("noise");
    Eigen::VectorXd noise(L);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < L; ++j) {
            const auto& node = sem.nodes[std::size_t(j)];
            noise(j) = noise_rng.normal(node.noise_mean, node.noise_stdev);
        }
        const SemSpec::Draw d = sem.evaluate(noise);
        data.raw_features.row(i) = d.sample.transpose();
        data.labels[std::size_t(i)] = d.label;
    }

    Rng split_rng = Rng(seed).derive("split");
    data.split = make_splits(n, split_rng);
    data.standardizer = fit_standardizer(data.raw_features, data.split.train, data.feature_names);
    data.features = data.standardizer.transform(data.raw_features);
    data.constraints = std::move(constraints);
    data.notes = std::move(notes);
    return data;
}

}  // namespace

Dataset generate_toy(int n, std::uint64_t seed) {
    std::vector<RelationConstraint> constraints = {
        {2, 3, -1, RelationConstraint::Transform::identity, "X4 counter-moves X3"}};
    return from_sem(toy_sem(), "toy", n, seed, std::move(constraints), {});
}

Dataset generate_nonlinear(int n, std::uint64_t seed) {
    std::vector<RelationConstraint> constraints = {
        {0, 1, +1, RelationConstraint::Transform::square, "X1^2 co-moves with X2"},
        {3, 4, +1, RelationConstraint::Transform::identity, "X5 co-moves with X4"}};
    return from_sem(nonlinear_sem(), "nonlinear", n, seed, std::move(constraints),
                    {"X4 clamped to [-6, 6] before exponentiation in X5"});
}

// ---- CSV ingestion ------------------------------------------------------------

CsvSchema pima_schema() {
    CsvSchema s;
    s.features = {{"Pregnancies", false}, {"Glucose", true},  {"BloodPressure", true},
                  {"SkinThickness", true}, {"Insulin", true}, {"BMI", true},
                  {"Age", false}};
    s.label_column = "Outcome";
    return s;
}

Dataset ingest_csv(const std::string& path, const CsvSchema& schema, std::uint64_t seed,
                   bool leave_one_out, std::vector<RelationConstraint> constraints,
                   const std::string& name) {
    if (schema.features.empty()) throw SchemaError("schema has no feature columns");
    const CsvTable table = read_csv(path);

    std::vector<int> col_idx;
    for (const ColumnSpec& c : schema.features) {
        const int idx = table.column_index(c.name);
        if (idx < 0) throw SchemaError(path + ": missing column '" + c.name + "'");
        col_idx.push_back(idx);
    }
    const int label_idx = table.column_index(schema.label_column);
    if (label_idx < 0) throw SchemaError(path + ": missing label column '" + schema.label_column + "'");

    const int L = int(schema.features.size());
    std::vector<Eigen::VectorXd> kept;
    std::vector<int> labels;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        Eigen::VectorXd values(L);
        bool missing = false;
        for (int j = 0; j < L && !missing; ++j) {
            const auto v = parse_cell(row[std::size_t(col_idx[std::size_t(j)])], int(r) + 2,
                                      schema.features[std::size_t(j)].name);
            if (!v.has_value() ||
                (schema.features[std::size_t(j)].zero_is_missing && *v == 0.0)) {
                missing = true;
            } else {
                values(j) = *v;
            }
        }
        if (missing) continue;
        const auto lv = parse_cell(row[std::size_t(label_idx)], int(r) + 2, schema.label_column);
        if (!lv.has_value()) continue;
        if (*lv != 0.0 && *lv != 1.0) {
            throw DataError(path + ": row " + std::to_string(r + 2) + ": label must be 0 or 1, got " +
                            format_double(*lv));
        }
        kept.push_back(std::move(values));
        labels.push_back(int(*lv));
    }
    if (kept.empty()) throw DataError(path + ": no usable rows after applying the missing-value policy");

    Dataset data;
    data.name = name;
    data.seed = seed;
    data.raw_features.resize(Eigen::Index(kept.size()), L);
    for (std::size_t i = 0; i < kept.size(); ++i) data.raw_features.row(Eigen::Index(i)) = kept[i];
    data.labels = std::move(labels);
    for (const ColumnSpec& c : schema.features) data.feature_names.push_back(c.name);

    if (leave_one_out) {
        data.split.leave_one_out = true;
        data.split.train.resize(kept.size());
        std::iota(data.split.train.begin(), data.split.train.end(), 0);
    } else {
        Rng split_rng = Rng(seed).derive("split");
        data.split = make_splits(int(kept.size()), split_rng);
    }
    data.standardizer = fit_standardizer(data.raw_features, data.split.train, data.feature_names);
    data.features = data.standardizer.transform(data.raw_features);
    data.constraints = std::move(constraints);
    return data;
}

// ---- persistence ---------------------------------------------------------------

namespace {

json splits_to_json(const Splits& s) {
    return json{{"train", s.train}, {"val", s.val}, {"test", s.test},
                {"leave_one_out", s.leave_one_out}};
}

Splits splits_from_json(const json& j) {
    Splits s;
    s.train = j.at("train").get<std::vector<int>>();
    s.val = j.at("val").get<std::vector<int>>();
    s.test = j.at("test").get<std::vector<int>>();
    s.leave_one_out = j.at("leave_one_out").get<bool>();
    return s;
}

json constraint_to_json(const RelationConstraint& c) {
    return json{{"attr_a", c.attr_a},
                {"attr_b", c.attr_b},
                {"sign", c.sign},
                {"transform_a", c.transform_a == RelationConstraint::Transform::square
                                    ? "square"
                                    : "identity"},
                {"description", c.description}};
}

RelationConstraint constraint_from_json(const json& j) {
    RelationConstraint c;
    c.attr_a = j.at("attr_a").get<int>();
    c.attr_b = j.at("attr_b").get<int>();
    c.sign = j.at("sign").get<int>();
    c.transform_a = j.at("transform_a").get<std::string>() == "square"
                        ? RelationConstraint::Transform::square
                        : RelationConstraint::Transform::identity;
    c.description = j.at("description").get<std::string>();
    return c;
}

}  // namespace

void save_dataset(const Dataset& data, const std::string& dir) {
    std::filesystem::create_directories(dir);

    std::ostringstream csv;
    for (const auto& n : data.feature_names) csv << n << ",";
    csv << "label\n";
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        for (Eigen::Index j = 0; j < data.num_attributes(); ++j) {
            csv << format_double(data.raw_features(i, j)) << ",";
        }
        csv << data.labels[std::size_t(i)] << "\n";
    }
    write_text_file(dir + "/dataset.csv", csv.str());

    json meta;
    meta["name"] = data.name;
    meta["seed"] = data.seed;
    meta["num_samples"] = data.size();
    meta["feature_names"] = data.feature_names;
    meta["split"] = splits_to_json(data.split);
    meta["standardizer"] = {{"mean", std::vector<double>(data.standardizer.mean.data(),
                                                         data.standardizer.mean.data() +
                                                             data.standardizer.mean.size())},
                            {"stdev", std::vector<double>(data.standardizer.stdev.data(),
                                                          data.standardizer.stdev.data() +
                                                              data.standardizer.stdev.size())}};
    json cs = json::array();
    for (const auto& c : data.constraints) cs.push_back(constraint_to_json(c));
    meta["constraints"] = cs;
    meta["notes"] = data.notes;
    write_text_file(dir + "/dataset.meta.json", meta.dump(2) + "\n");
}

Dataset load_dataset(const std::string& dir) {
    const json meta = json::parse(read_text_file(dir + "/dataset.meta.json"));
    const CsvTable table = read_csv(dir + "/dataset.csv");

    Dataset data;
    data.name = meta.at("name").get<std::string>();
    data.seed = meta.at("seed").get<std::uint64_t>();
    data.feature_names = meta.at("feature_names").get<std::vector<std::string>>();
    data.split = splits_from_json(meta.at("split"));
    const auto mean = meta.at("standardizer").at("mean").get<std::vector<double>>();
    const auto stdev = meta.at("standardizer").at("stdev").get<std::vector<double>>();
    data.standardizer.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), Eigen::Index(mean.size()));
    data.standardizer.stdev =
        Eigen::Map<const Eigen::VectorXd>(stdev.data(), Eigen::Index(stdev.size()));
    for (const auto& c : meta.at("constraints")) {
        data.constraints.push_back(constraint_from_json(c));
    }
    data.notes = meta.at("notes").get<std::vector<std::string>>();

    const int L = int(data.feature_names.size());
    const int label_idx = table.column_index("label");
    if (label_idx < 0) throw SchemaError(dir + "/dataset.csv: missing 'label' column");
    std::vector<int> cols(static_cast<std::size_t>(L));
    for (int j = 0; j < L; ++j) {
        cols[std::size_t(j)] = table.column_index(data.feature_names[std::size_t(j)]);
        if (cols[std::size_t(j)] < 0) {
            throw SchemaError(dir + "/dataset.csv: missing column '" +
                              data.feature_names[std::size_t(j)] + "'");
        }
    }
    data.raw_features.resize(Eigen::Index(table.rows.size()), L);
    data.labels.resize(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (int j = 0; j < L; ++j) {
            const auto v = parse_cell(table.rows[r][std::size_t(cols[std::size_t(j)])], int(r) + 2,
                                      data.feature_names[std::size_t(j)]);
            if (!v) throw ParseError(dir + "/dataset.csv: unexpected missing cell");
            data.raw_features(Eigen::Index(r), j) = *v;
        }
        const auto lv = parse_cell(table.rows[r][std::size_t(label_idx)], int(r) + 2, "label");
        if (!lv || (*lv != 0.0 && *lv != 1.0)) {
            throw ParseError(dir + "/dataset.csv: bad label at row " + std::to_string(r + 2));
        }
        data.labels[r] = int(*lv);
    }
    data.features = data.standardizer.transform(data.raw_features);
    return data;
}

}  // namespace rcf
