#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rcf/autodiff.hpp"
#include "rcf/rng.hpp"

namespace rcf {

using ad::Matrix;

// Declared monotone relationship between two attributes, scored on raw-unit
// deltas. transform_a covers relationships stated on a function of the
// attribute (e.g. co-movement of X1^2 with X2).
struct RelationConstraint {
    int attr_a = 0;
    int attr_b = 0;
    int sign = +1;  // +1 co-move, -1 counter-move
    enum class Transform { identity, square };
    Transform transform_a = Transform::identity;
    std::string description;
};

// Per-feature affine map fit on the training split only.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd stdev;

    Eigen::Index size() const { return mean.size(); }
    Matrix transform(const Matrix& raw) const;
    Matrix inverse(const Matrix& standardized) const;
    std::string fingerprint() const;  // stable identifier for model files
};

// Fits on the given rows; throws DataError naming any constant column.
Standardizer fit_standardizer(const Matrix& raw, const std::vector<int>& rows,
                              const std::vector<std::string>& names);

struct Splits {
    std::vector<int> train;
    std::vector<int> val;
    std::vector<int> test;
    bool leave_one_out = false;
};

struct Dataset {
    std::string name;
    Matrix raw_features;  // N x L, original units (authoritative)
    Matrix features;      // N x L, standardized with `standardizer`
    std::vector<int> labels;
    std::vector<std::string> feature_names;
    Splits split;
    Standardizer standardizer;
    std::vector<RelationConstraint> constraints;
    std::uint64_t seed = 0;
    std::vector<std::string> notes;

    Eigen::Index size() const { return features.rows(); }
    Eigen::Index num_attributes() const { return features.cols(); }

    Matrix gather(const std::vector<int>& rows) const;      // standardized rows
    Matrix gather_raw(const std::vector<int>& rows) const;  // raw rows
    std::vector<int> gather_labels(const std::vector<int>& rows) const;
};

// Structural equation model: node j is a function of earlier nodes plus its
// Gaussian noise draw. Root nodes carry their noise as the value, so the
// noise-free skeleton propagates drawn root noises through noiseless
// equations; the label rule reads the skeleton.
struct SemSpec {
    struct Node {
        std::function<double(const Eigen::VectorXd& values, double noise)> equation;
        double noise_mean = 0.0;
        double noise_stdev = 1.0;
        bool is_root = false;
    };

    std::vector<Node> nodes;
    std::function<int(const Eigen::VectorXd& skeleton)> label_rule;

    struct Draw {
        Eigen::VectorXd sample;
        Eigen::VectorXd skeleton;
        int label = 0;
    };

    int num_attributes() const { return int(nodes.size()); }
    Draw evaluate(const Eigen::VectorXd& noise) const;
};

SemSpec toy_sem();
SemSpec nonlinear_sem();

Dataset generate_toy(int n, std::uint64_t seed);
Dataset generate_nonlinear(int n, std::uint64_t seed);

// CSV ingestion. Rows with missing cells (empty/NA) or zero-coded-missing
// cells (per column flag) are dropped; any other non-numeric cell is a
// ParseError.
struct ColumnSpec {
    std::string name;
    bool zero_is_missing = false;
};

struct CsvSchema {
    std::vector<ColumnSpec> features;
    std::string label_column;
};

Dataset ingest_csv(const std::string& path, const CsvSchema& schema, std::uint64_t seed,
                   bool leave_one_out = false, std::vector<RelationConstraint> constraints = {},
                   const std::string& name = "csv");

// The 7-attribute diabetes screening schema (zero-coded missing on the
// physiological columns).
CsvSchema pima_schema();

// Canonical on-disk form: <dir>/dataset.csv (raw units + label) and
// <dir>/dataset.meta.json (splits, standardizer, constraints, notes, seed).
void save_dataset(const Dataset& data, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace rcf
