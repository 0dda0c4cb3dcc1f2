#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcf/dataset.hpp"
#include "rcf/nn.hpp"

namespace rcf {

// Augmented-Lagrangian schedule for driving the acyclicity constraint to
// zero while maximizing the ELBO.
struct VaeTrainConfig {
    int epochs_per_round = 30;
    int max_rounds = 20;
    int warmup_epochs = 10;  // noise-free autoencoder epochs before sampling
    int batch_size = 128;
    double learning_rate = 1e-3;
    int latent_dim = 4;
    int hidden_size = 16;
    double alpha_acyc = 0.0;  // <=0 means 1/L
    double kl_weight = 0.05;
    double lambda_init = 0.0;
    double penalty_init = 1.0;
    double penalty_growth = 10.0;
    double h_tolerance = 1e-8;
    double shrink_factor = 0.25;
    std::uint64_t seed = 0;
};

// Stage-1 model: encoder/decoder MLPs applied per attribute, mixed across
// attributes through the learnable adjacency. The adjacency diagonal is held
// at zero by masking inside every forward pass.
struct CausalVae {
    ad::Parameter adjacency;  // L x L
    nn::Mlp2 encoder;         // 1 -> hidden -> 2*latent_dim
    nn::Mlp2 decoder;         // latent_dim -> hidden -> 1
    int latent_dim = 4;
    double alpha_acyc = 0.2;
    double kl_weight = 0.05;
    std::string standardizer_ref;
    bool converged = true;
    double final_h = 0.0;
    VaeTrainConfig config;

    Eigen::Index num_attributes() const { return adjacency.value.rows(); }
};

struct VaeTrainReport {
    std::vector<double> loss_per_epoch;
    std::vector<double> h_per_round;
    std::vector<double> recon_mse_per_round;  // deterministic, training split
    int rounds_run = 0;
    int skipped_steps = 0;
    bool converged = true;
    double final_h = 0.0;
};

struct EncodeOut {
    ad::Tensor mean;    // (batch*L) x d
    ad::Tensor logvar;  // (batch*L) x d, clamped to [-20, 20]
};

// x: batch x L standardized. train=true leases VAE weights as trainable.
EncodeOut vae_encode(ad::Tape& tape, CausalVae& vae, const ad::Tensor& x, bool train);
EncodeOut vae_encode(ad::Tape& tape, const CausalVae& vae, const ad::Tensor& x);

// z: (batch*L) x d. Returns batch x L reconstruction. Throws NumericError if
// (I - A^T) is near singular (training guards against this).
ad::Tensor vae_decode(ad::Tape& tape, CausalVae& vae, const ad::Tensor& z, Eigen::Index batch,
                      bool train);
ad::Tensor vae_decode(ad::Tape& tape, const CausalVae& vae, const ad::Tensor& z,
                      Eigen::Index batch);

struct ElboParts {
    ad::Tensor loss;   // recon + kl_weight * kl, batch mean (minimizable)
    ad::Tensor recon;  // 0.5 * squared error, batch mean
    ad::Tensor kl;     // closed-form KL to the standard normal, batch mean (unweighted)
};

// eps: (batch*L) x d standard-normal draws for the reparameterized sample.
ElboParts elbo_loss(ad::Tape& tape, CausalVae& vae, const ad::Tensor& x, const Matrix& eps,
                    bool train);

// Convenience value-only paths.
Matrix encode_mean(const CausalVae& vae, const Matrix& x);      // (N*L) x d
Matrix reconstruct(const CausalVae& vae, const Matrix& x);      // N x L, posterior mean
double reconstruction_mse(const CausalVae& vae, const Matrix& x);
double acyclicity_value(const CausalVae& vae);

CausalVae train_vae(const Dataset& data, const VaeTrainConfig& config,
                    VaeTrainReport* report = nullptr);

void save_vae(const CausalVae& vae, const std::string& path);
CausalVae load_vae(const std::string& path);

}  // namespace rcf
