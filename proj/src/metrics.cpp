#include "rcf/metrics.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace rcf {

double validity(const std::vector<CounterfactualResult>& results) {
    if (results.empty()) throw DataError("validity: no results");
    int hits = 0;
    for (const auto& r : results) hits += r.valid();
    return double(hits) / double(results.size());
}

namespace {

double transformed(double v, RelationConstraint::Transform t) {
    return t == RelationConstraint::Transform::square ? v * v : v;
}

}  // namespace

std::pair<double, std::vector<double>> constraint_score(
    const std::vector<CounterfactualResult>& results,
    const std::vector<RelationConstraint>& constraints, double epsilon) {
    if (results.empty()) throw DataError("constraint_score: no results");
    if (constraints.empty()) throw SchemaError("constraint_score: no constraints declared");
    std::vector<double> per;
    per.reserve(constraints.size());
    const Eigen::Index L = results.front().original.size();
    for (const auto& c : constraints) {
        if (c.attr_a < 0 || c.attr_a >= L || c.attr_b < 0 || c.attr_b >= L) {
            throw SchemaError("constraint_score: attribute index out of range for constraint '" +
                              c.description + "'");
        }
        int preserved = 0;
        for (const auto& r : results) {
            double da = transformed(r.counterfactual(c.attr_a), c.transform_a) -
                        transformed(r.original(c.attr_a), c.transform_a);
            double db = r.counterfactual(c.attr_b) - r.original(c.attr_b);
            if (std::abs(da) < epsilon) da = 0.0;
            if (std::abs(db) < epsilon) db = 0.0;
            preserved += double(c.sign) * da * db >= 0.0;
        }
        per.push_back(double(preserved) / double(results.size()));
    }
    return {harmonic_combine(per), per};
}

double harmonic_combine(const std::vector<double>& scores) {
    if (scores.empty()) throw DataError("harmonic_combine: no scores");
    double denom = 0.0;
    for (double s : scores) {
        if (s < 0.0 || s > 1.0) throw DataError("harmonic_combine: score outside [0, 1]");
        if (s == 0.0) return 0.0;
        denom += 1.0 / s;
    }
    return double(scores.size()) / denom;
}

double euclidean_normalized(const std::vector<CounterfactualResult>& results,
                            const Matrix& reference_raw) {
    if (results.empty()) throw DataError("euclidean_normalized: no results");
    if (reference_raw.rows() < 2) {
        throw DataError("euclidean_normalized: reference needs at least two points");
    }
    double diameter_sq = 0.0;
    for (Eigen::Index i = 0; i < reference_raw.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < reference_raw.rows(); ++j) {
            diameter_sq =
                std::max(diameter_sq, (reference_raw.row(i) - reference_raw.row(j)).squaredNorm());
        }
    }
    if (diameter_sq <= 0.0) {
        throw DataError("euclidean_normalized: reference set has zero diameter");
    }
    const double diameter = std::sqrt(diameter_sq);
    double total = 0.0;
    for (const auto& r : results) total += (r.original - r.counterfactual).norm() / diameter;
    return total / double(results.size());
}

double mahalanobis_mean(const std::vector<CounterfactualResult>& results,
                        const Matrix& reference_raw) {
    if (results.empty()) throw DataError("mahalanobis_mean: no results");
    const Eigen::Index n = reference_raw.rows();
    const Eigen::Index L = reference_raw.cols();
    if (n <= L) {
        throw DataError("mahalanobis_mean: need more reference points than attributes");
    }
    const Eigen::RowVectorXd mean = reference_raw.colwise().mean();
    const Matrix centered = reference_raw.rowwise() - mean;
    Matrix sigma = (centered.transpose() * centered) / double(n - 1);
    sigma.diagonal().array() += 1e-6;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw NumericError("mahalanobis_mean: covariance is singular even after regularization");
    }
    double total = 0.0;
    for (const auto& r : results) {
        const Eigen::VectorXd diff = (r.original - r.counterfactual).transpose();
        const double d2 = diff.dot(ldlt.solve(diff));
        total += std::sqrt(std::max(0.0, d2));
    }
    return total / double(results.size());
}

MetricsReport evaluate_method(const std::string& name,
                              const std::vector<CounterfactualResult>& results,
                              const std::vector<RelationConstraint>& constraints,
                              const Matrix& reference_raw) {
    MetricsReport rep;
    rep.method_name = name;
    rep.validity = validity(results);
    if (!constraints.empty()) {
        auto [overall, per] = constraint_score(results, constraints);
        rep.constraint_score = overall;
        rep.per_constraint = std::move(per);
    }
    rep.euclidean_mean = euclidean_normalized(results, reference_raw);
    rep.mahalanobis_mean = mahalanobis_mean(results, reference_raw);
    rep.n_evaluated = int(results.size());
    return rep;
}

}  // namespace rcf
