#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rcf/cf_engine.hpp"
#include "rcf/dataset.hpp"

namespace rcf {

struct MetricsReport {
    std::string method_name;
    double validity = 0.0;
    double constraint_score = 0.0;  // harmonic combination across constraints
    std::vector<double> per_constraint;
    double euclidean_mean = 0.0;  // normalized by the reference diameter
    double mahalanobis_mean = 0.0;
    int n_evaluated = 0;
};

// Fraction of results whose predicted label equals the requested target.
double validity(const std::vector<CounterfactualResult>& results);

// Per constraint (a, b, sign): preserved when sign * da * db >= 0 on raw-unit
// deltas; |delta| below epsilon counts as zero (a zero change never
// violates). Scores combine by harmonic mean (n / sum(1/S_i); any zero score
// makes the combination zero).
std::pair<double, std::vector<double>> constraint_score(
    const std::vector<CounterfactualResult>& results,
    const std::vector<RelationConstraint>& constraints, double epsilon = 1e-6);

double harmonic_combine(const std::vector<double>& scores);

// Mean ||original - counterfactual|| / diameter(reference), raw units;
// diameter is the exact O(n^2) max pairwise distance.
double euclidean_normalized(const std::vector<CounterfactualResult>& results,
                            const Matrix& reference_raw);

// Mean sqrt((x - x_cf)^T Sigma^-1 (x - x_cf)) with Sigma the sample
// covariance of the reference originals plus a 1e-6 ridge.
double mahalanobis_mean(const std::vector<CounterfactualResult>& results,
                        const Matrix& reference_raw);

MetricsReport evaluate_method(const std::string& name,
                              const std::vector<CounterfactualResult>& results,
                              const std::vector<RelationConstraint>& constraints,
                              const Matrix& reference_raw);

}  // namespace rcf
