#pragma once

#include "rcf/cf_engine.hpp"
#include "rcf/classifier.hpp"
#include "rcf/dataset.hpp"

namespace rcf {

// Gradient search directly in standardized input space: minimize
// lambda * hinge(s(x_cf), y_cf, beta) + ||x - x_cf||^2, Adam on x_cf with a
// halve-on-increase safeguard. The k-variant adds knn_weight * mean squared
// distance to the k nearest target-class training samples, re-selected every
// step.
struct PlainCfConfig {
    double lambda = 1.0;
    int steps = 500;
    double learning_rate = 0.05;
    double beta = 0.1;
    int k = 5;                // Plain-CF_K only
    double knn_weight = 0.5;  // Plain-CF_K only
};

CounterfactualResult plain_cf(const ClassifierModel& blackbox, const Standardizer& standardizer,
                              const Eigen::RowVectorXd& x_raw, int y_cf,
                              const PlainCfConfig& config);

// train_std/train_labels: standardized training samples the neighbour pool is
// drawn from. Throws DataError when the pool holds fewer than k samples of
// class y_cf.
CounterfactualResult plain_cf_k(const ClassifierModel& blackbox, const Standardizer& standardizer,
                                const Eigen::RowVectorXd& x_raw, int y_cf, const Matrix& train_std,
                                const std::vector<int>& train_labels, const PlainCfConfig& config);

}  // namespace rcf
