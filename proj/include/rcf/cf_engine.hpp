#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rcf/causal_vae.hpp"
#include "rcf/classifier.hpp"
#include "rcf/dataset.hpp"

namespace rcf {

// Maps (query || one-hot target label) to a latent perturbation, scaled by
// gamma to keep early training stable.
struct ModulationNet {
    nn::Mlp2 mlp;  // (L+2) -> hidden -> L*d
    double gamma = 0.05;
};

// Separates data latents from perturbed latents; the modulation net trains
// against it so counterfactual latents stay on the data's latent
// distribution.
struct Discriminator {
    nn::Mlp2 mlp;  // L*d -> hidden -> 1, sigmoid applied at use
};

struct CfTrainConfig {
    double alpha1 = 1.0;  // classification (hinge)
    double alpha2 = 1.0;  // nearest
    double alpha3 = 0.5;  // adversarial
    double beta = 2.0;    // hinge margin, log-odds scale
    double gamma = 0.05;
    int epochs = 100;
    int batch_size = 32;
    int dis_every = 1;  // discriminator update every k-th modulation step
    double learning_rate_mod = 1e-3;
    double learning_rate_dis = 1e-3;
    int hidden_size = 32;
    std::uint64_t seed = 0;
};

struct CfEngine {
    ModulationNet mod;
    Discriminator dis;
    CfTrainConfig config;
    std::string standardizer_ref;
};

struct CfTrainReport {
    std::vector<double> total_per_epoch;
    std::vector<double> hinge_per_epoch;
    std::vector<double> nearest_per_epoch;
    std::vector<double> adversarial_per_epoch;
    std::vector<double> discriminator_per_epoch;
};

struct CounterfactualResult {
    Eigen::RowVectorXd original;        // raw units
    Eigen::RowVectorXd counterfactual;  // raw units
    int original_label = 0;             // black-box prediction of the original
    int target_label = 0;
    int predicted_cf_label = 0;
    double delta_norm = 0.0;  // L2 norm of the applied perturbation
    Matrix latent;            // L x d (empty for input-space methods)
    Matrix latent_cf;
    std::string note;

    bool valid() const { return predicted_cf_label == target_label; }
};

// ---- Stage-2 building blocks -------------------------------------------------

struct PerturbOut {
    ad::Tensor z;      // (batch*L) x d, posterior mean (no sampling here)
    ad::Tensor z_cf;   // z + delta
    ad::Tensor delta;  // gamma-scaled modulation output
};

// x: batch x L standardized; y_cf: one target label per row. train_mod leases
// the modulation weights; the VAE is always frozen.
PerturbOut perturb_latent(ad::Tape& tape, ModulationNet& mod, const CausalVae& vae,
                          const ad::Tensor& x, const std::vector<int>& y_cf, bool train_mod);
PerturbOut perturb_latent(ad::Tape& tape, const ModulationNet& mod, const CausalVae& vae,
                          const ad::Tensor& x, const std::vector<int>& y_cf);

// max{ max_{y != y_cf} s_y - s_{y_cf}, -beta } for one probability vector.
double hinge_class_loss(const Eigen::RowVectorXd& scores, int y_cf, double beta);

// Tape-level per-row hinge on 2-class probabilities; returns batch x 1.
ad::Tensor hinge_loss_rows(ad::Tape& tape, const ad::Tensor& proba, const std::vector<int>& y_cf,
                           double beta);

// dist(x, x_cf) + ||delta||^2 with squared Euclidean distance, one sample.
double nearest_loss(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& x_cf,
                    const Eigen::RowVectorXd& delta_flat);

// Value-level adversarial pair: mod_loss = -mean log f(z_cf),
// dis_loss = -mean[log f(z) + log(1 - f(z_cf))]; outputs clamped to
// [1e-7, 1-1e-7] before the logs. Batches are flattened, one row per sample.
std::pair<double, double> adversarial_losses(const Discriminator& dis, const Matrix& z_batch,
                                             const Matrix& z_cf_batch);

// ---- training / generation ----------------------------------------------------

CfEngine train_cf(const CausalVae& vae, const ClassifierModel& blackbox, const Dataset& data,
                  const CfTrainConfig& config, CfTrainReport* report = nullptr);

// Batched generation; order-preserving, one result per input row. y_cf may be
// empty, meaning "flip the black-box prediction".
std::vector<CounterfactualResult> generate(const CfEngine& engine, const CausalVae& vae,
                                           const ClassifierModel& blackbox,
                                           const Standardizer& standardizer, const Matrix& x_raw,
                                           std::vector<int> y_cf = {});

void save_cf_engine(const CfEngine& engine, const std::string& path);
CfEngine load_cf_engine(const std::string& path);

}  // namespace rcf
