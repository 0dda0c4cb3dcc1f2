#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcf/dataset.hpp"
#include "rcf/nn.hpp"

namespace rcf {

struct ClassifierConfig {
    int hidden_size = 32;
    double learning_rate = 1e-3;
    int epochs = 200;
    int batch_size = 64;
    int patience = 20;  // early stop on val-accuracy plateau; 0 disables
    std::uint64_t seed = 0;
};

// The frozen black box h(.). Two-layer ReLU MLP with a 2-way softmax head;
// downstream stages consume input gradients only, never weight gradients.
struct ClassifierModel {
    nn::Mlp2 mlp;
    ClassifierConfig config;
    std::string standardizer_ref;

    Eigen::Index num_features() const { return mlp.l1.weight.value.rows(); }
};

struct ClassifierReport {
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    double test_accuracy = 0.0;
    int epochs_run = 0;
    std::vector<double> loss_curve;  // mean cross-entropy per epoch
};

ClassifierModel train_classifier(const Dataset& data, const ClassifierConfig& config,
                                 ClassifierReport* report = nullptr);

// Tape-level forward with frozen weights: gradients flow to x, not into the
// model. x is standardized, batch x L.
ad::Tensor classifier_logits(ad::Tape& tape, const ClassifierModel& model, const ad::Tensor& x);
ad::Tensor classifier_proba(ad::Tape& tape, const ClassifierModel& model, const ad::Tensor& x);

Matrix predict_proba(const ClassifierModel& model, const Matrix& x);
// Argmax with ties broken toward label 0.
std::vector<int> predict(const ClassifierModel& model, const Matrix& x);
int predict_one(const ClassifierModel& model, const Eigen::RowVectorXd& x);
double accuracy(const ClassifierModel& model, const Matrix& x, const std::vector<int>& labels);

void save_classifier(const ClassifierModel& model, const std::string& path);
ClassifierModel load_classifier(const std::string& path);

}  // namespace rcf
