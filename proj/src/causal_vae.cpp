#include "rcf/causal_vae.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "rcf/csv.hpp"
#include "rcf/serialize.hpp"

namespace rcf {

using ad::Tape;
using ad::Tensor;
using nlohmann::json;

namespace {

constexpr double kLogvarClamp = 20.0;

// (I - A_masked^T) with the diagonal forced to zero through the mask, so the
// stored diagonal never receives gradient.
Tensor i_minus_at(Tape& tape, const ad::Parameter& adjacency, bool train) {
    const Eigen::Index L = adjacency.value.rows();
    Tensor a = train ? tape.param(const_cast<ad::Parameter&>(adjacency)) : tape.frozen(adjacency);
    Matrix mask = Matrix::Ones(L, L);
    mask.diagonal().setZero();
    Tensor masked = ad::hadamard(a, tape.constant(std::move(mask)));
    return ad::sub(tape.constant(Matrix::Identity(L, L)), ad::transpose(masked));
}

Tensor masked_adjacency(Tape& tape, const ad::Parameter& adjacency, bool train) {
    const Eigen::Index L = adjacency.value.rows();
    Tensor a = train ? tape.param(const_cast<ad::Parameter&>(adjacency)) : tape.frozen(adjacency);
    Matrix mask = Matrix::Ones(L, L);
    mask.diagonal().setZero();
    return ad::hadamard(a, tape.constant(std::move(mask)));
}

EncodeOut encode_impl(Tape& tape, const CausalVae& vae, const Tensor& x, bool train) {
    const Eigen::Index L = vae.num_attributes();
    if (x.cols() != L) {
        throw ShapeError("vae_encode: input has " + std::to_string(x.cols()) +
                         " attributes, model expects " + std::to_string(L));
    }
    const Eigen::Index batch = x.rows();
    const int d = vae.latent_dim;
    Tensor per_attr = ad::reshape(x, batch * L, 1);
    Tensor h = train ? nn::forward(tape, const_cast<CausalVae&>(vae).encoder, per_attr, true)
                     : nn::forward(tape, vae.encoder, per_attr);
    Tensor mixed = ad::block_matmul(i_minus_at(tape, vae.adjacency, train), h, batch);
    EncodeOut out;
    out.mean = ad::slice_cols(mixed, 0, d);
    out.logvar = ad::clamp(ad::slice_cols(mixed, d, 2 * d), -kLogvarClamp, kLogvarClamp);
    return out;
}

Tensor decode_impl(Tape& tape, const CausalVae& vae, const Tensor& z, Eigen::Index batch,
                   bool train) {
    const Eigen::Index L = vae.num_attributes();
    if (z.cols() != vae.latent_dim || z.rows() != batch * L) {
        throw ShapeError("vae_decode: z is " + std::to_string(z.rows()) + "x" +
                         std::to_string(z.cols()) + ", expected " + std::to_string(batch * L) +
                         "x" + std::to_string(vae.latent_dim));
    }
    Tensor w = ad::inverse(i_minus_at(tape, vae.adjacency, train));
    Tensor mixed = ad::block_matmul(w, z, batch);
    Tensor h = train ? nn::forward(tape, const_cast<CausalVae&>(vae).decoder, mixed, true)
                     : nn::forward(tape, vae.decoder, mixed);
    return ad::reshape(h, batch, L);
}

}  // namespace

EncodeOut vae_encode(Tape& tape, CausalVae& vae, const Tensor& x, bool train) {
    return encode_impl(tape, vae, x, train);
}

EncodeOut vae_encode(Tape& tape, const CausalVae& vae, const Tensor& x) {
    return encode_impl(tape, vae, x, false);
}

Tensor vae_decode(Tape& tape, CausalVae& vae, const Tensor& z, Eigen::Index batch, bool train) {
    return decode_impl(tape, vae, z, batch, train);
}

Tensor vae_decode(Tape& tape, const CausalVae& vae, const Tensor& z, Eigen::Index batch) {
    return decode_impl(tape, vae, z, batch, false);
}

namespace {

// Warmup objective: deterministic autoencoding through the posterior mean
// with an L2 pull on the codes. The log-variance head stays out of the loss,
// so sampling later resumes from the narrow initialization.
Tensor warmup_loss(Tape& tape, CausalVae& vae, const Tensor& x) {
    const Eigen::Index batch = x.rows();
    EncodeOut enc = encode_impl(tape, vae, x, true);
    Tensor xhat = decode_impl(tape, vae, enc.mean, batch, true);
    const double inv_n = 1.0 / double(batch);
    Tensor recon = ad::scale(ad::l2_norm_sq(ad::sub(x, xhat)), 0.5 * inv_n);
    Tensor code = ad::scale(ad::l2_norm_sq(enc.mean), 0.5 * inv_n * vae.kl_weight);
    return ad::add(recon, code);
}

}  // namespace

ElboParts elbo_loss(Tape& tape, CausalVae& vae, const Tensor& x, const Matrix& eps, bool train) {
    const Eigen::Index batch = x.rows();
    EncodeOut enc = encode_impl(tape, vae, x, train);
    Tensor sigma = ad::exp(ad::scale(enc.logvar, 0.5));
    Tensor z = ad::add(enc.mean, ad::hadamard(sigma, tape.constant(eps)));
    Tensor xhat = decode_impl(tape, vae, z, batch, train);

    const double inv_n = 1.0 / double(batch);
    ElboParts parts;
    parts.recon = ad::scale(ad::l2_norm_sq(ad::sub(x, xhat)), 0.5 * inv_n);
    // KL(N(mu, sigma^2) || N(0, I)) = 0.5 * sum(mu^2 + sigma^2 - 1 - log sigma^2)
    Tensor kl_terms = ad::sub(ad::add(ad::square(enc.mean), ad::exp(enc.logvar)), enc.logvar);
    parts.kl = ad::scale(ad::add_scalar(ad::sum(kl_terms), -double(kl_terms.rows() * kl_terms.cols())),
                         0.5 * inv_n);
    parts.loss = ad::add(parts.recon, ad::scale(parts.kl, vae.kl_weight));
    return parts;
}

Matrix encode_mean(const CausalVae& vae, const Matrix& x) {
    Tape tape;
    return vae_encode(tape, vae, tape.constant(x)).mean.value();
}

Matrix reconstruct(const CausalVae& vae, const Matrix& x) {
    Tape tape;
    EncodeOut enc = vae_encode(tape, vae, tape.constant(x));
    return vae_decode(tape, vae, enc.mean, x.rows()).value();
}

double reconstruction_mse(const CausalVae& vae, const Matrix& x) {
    const Matrix xhat = reconstruct(vae, x);
    return (x - xhat).squaredNorm() / double(x.rows() * x.cols());
}

double acyclicity_value(const CausalVae& vae) {
    Tape tape;
    Tensor a = masked_adjacency(tape, vae.adjacency, false);
    return ad::acyclicity_penalty(a, vae.alpha_acyc).scalar();
}

CausalVae train_vae(const Dataset& data, const VaeTrainConfig& config, VaeTrainReport* report) {
    const Eigen::Index L = data.num_attributes();
    const Matrix train_x = data.gather(data.split.train);
    if (train_x.rows() == 0) throw DataError("train_vae: empty training split");

    Rng init_rng = Rng(config.seed).derive("vae-init");
    Rng shuffle_rng = Rng(config.seed).derive("vae-shuffle");
    Rng eps_rng = Rng(config.seed).derive("vae-eps");

    CausalVae vae;
    vae.adjacency = ad::Parameter(Matrix::Zero(L, L));
    vae.latent_dim = config.latent_dim;
    vae.encoder = nn::make_mlp2(1, config.hidden_size, 2 * config.latent_dim, init_rng);
    vae.decoder = nn::make_mlp2(config.latent_dim, config.hidden_size, 1, init_rng);
    // Start the posterior narrow: the log-variance head opens at sigma ~ 0.2,
    // which keeps early reconstruction gradients clean.
    vae.encoder.l2.bias.value.rightCols(config.latent_dim).setConstant(-3.0);
    vae.alpha_acyc = config.alpha_acyc > 0.0 ? config.alpha_acyc : 1.0 / double(L);
    vae.kl_weight = config.kl_weight;
    vae.standardizer_ref = data.standardizer.fingerprint();
    vae.config = config;

    std::vector<ad::Parameter*> params = {&vae.adjacency};
    for (auto* p : nn::parameters(vae.encoder)) params.push_back(p);
    for (auto* p : nn::parameters(vae.decoder)) params.push_back(p);
    auto states = nn::make_adam_states(params, config.learning_rate);

    VaeTrainReport local;
    VaeTrainReport& rep = report ? *report : local;
    rep = VaeTrainReport{};

    double lambda = config.lambda_init;
    double c = config.penalty_init;
    double h_prev = std::numeric_limits<double>::infinity();

    std::vector<int> order(std::size_t(train_x.rows()));
    std::iota(order.begin(), order.end(), 0);

    const Eigen::Index n = train_x.rows();
    bool reached_tolerance = false;
    int global_epoch = 0;
    for (int round = 0; round < config.max_rounds && !reached_tolerance; ++round) {
        for (int epoch = 0; epoch < config.epochs_per_round; ++epoch, ++global_epoch) {
            const bool warmup = global_epoch < config.warmup_epochs;
            shuffle_rng.shuffle(order);
            double epoch_loss = 0.0;
            Eigen::Index done = 0;
            while (done < n) {
                const Eigen::Index bs = std::min<Eigen::Index>(config.batch_size, n - done);
                Matrix bx(bs, L);
                for (Eigen::Index i = 0; i < bs; ++i) {
                    bx.row(i) = train_x.row(order[std::size_t(done + i)]);
                }
                done += bs;
                Matrix eps = Matrix::Zero(bs * L, config.latent_dim);
                if (!warmup) {
                    for (Eigen::Index i = 0; i < eps.rows(); ++i)
                        for (Eigen::Index j = 0; j < eps.cols(); ++j) eps(i, j) = eps_rng.normal();
                }

                try {
                    Tape tape;
                    Tensor x = tape.constant(std::move(bx));
                    Tensor objective = warmup
                                           ? warmup_loss(tape, vae, x)
                                           : elbo_loss(tape, vae, x, eps, /*train=*/true).loss;
                    Tensor h = ad::acyclicity_penalty(masked_adjacency(tape, vae.adjacency, true),
                                                      vae.alpha_acyc);
                    Tensor loss = ad::add(objective,
                                          ad::add(ad::scale(h, lambda), ad::scale(ad::square(h), 0.5 * c)));
                    tape.backward(loss);
                    epoch_loss += loss.scalar() * double(bs);
                    ad::adam_step(params, states);
                } catch (const NumericError&) {
                    // Near-singular (I - A^T): skip the update and stiffen the
                    // constraint so A backs away from the singular region.
                    for (auto* p : params) {
                        p->grad.setZero();
                        p->has_grad = false;
                    }
                    c = std::min(c * config.penalty_growth, 1e16);
                    rep.skipped_steps += 1;
                }
            }
            rep.loss_per_epoch.push_back(epoch_loss / double(n));
        }
        const double h = acyclicity_value(vae);
        rep.h_per_round.push_back(h);
        rep.recon_mse_per_round.push_back(reconstruction_mse(vae, train_x));
        rep.rounds_run = round + 1;

        if (h < config.h_tolerance) {
            reached_tolerance = true;
            break;
        }
        lambda += c * h;
        if (h >= config.shrink_factor * h_prev) c = std::min(c * config.penalty_growth, 1e16);
        h_prev = h;
    }

    vae.final_h = acyclicity_value(vae);
    vae.converged = vae.final_h < config.h_tolerance;
    rep.final_h = vae.final_h;
    rep.converged = vae.converged;
    return vae;
}

void save_vae(const CausalVae& vae, const std::string& path) {
    json j;
    j["kind"] = "causal_vae";
    j["latent_dim"] = vae.latent_dim;
    j["alpha_acyc"] = vae.alpha_acyc;
    j["kl_weight"] = vae.kl_weight;
    j["standardizer_ref"] = vae.standardizer_ref;
    j["converged"] = vae.converged;
    j["final_h"] = vae.final_h;
    j["adjacency"] = to_json(vae.adjacency);
    j["encoder"] = to_json(vae.encoder);
    j["decoder"] = to_json(vae.decoder);
    j["config"] = {{"kl_weight", vae.config.kl_weight},
                   {"epochs_per_round", vae.config.epochs_per_round},
                   {"warmup_epochs", vae.config.warmup_epochs},
                   {"max_rounds", vae.config.max_rounds},
                   {"batch_size", vae.config.batch_size},
                   {"learning_rate", vae.config.learning_rate},
                   {"latent_dim", vae.config.latent_dim},
                   {"hidden_size", vae.config.hidden_size},
                   {"alpha_acyc", vae.config.alpha_acyc},
                   {"lambda_init", vae.config.lambda_init},
                   {"penalty_init", vae.config.penalty_init},
                   {"penalty_growth", vae.config.penalty_growth},
                   {"h_tolerance", vae.config.h_tolerance},
                   {"shrink_factor", vae.config.shrink_factor},
                   {"seed", vae.config.seed}};
    write_text_file(path, j.dump(2) + "\n");
}

CausalVae load_vae(const std::string& path) {
    const json j = json::parse(read_text_file(path));
    if (j.at("kind") != "causal_vae") throw ParseError(path + ": not a causal_vae file");
    CausalVae vae;
    vae.latent_dim = j.at("latent_dim").get<int>();
    vae.alpha_acyc = j.at("alpha_acyc").get<double>();
    vae.kl_weight = j.at("kl_weight").get<double>();
    vae.standardizer_ref = j.at("standardizer_ref").get<std::string>();
    vae.converged = j.at("converged").get<bool>();
    vae.final_h = j.at("final_h").get<double>();
    vae.adjacency = parameter_from_json(j.at("adjacency"));
    vae.encoder = mlp2_from_json(j.at("encoder"));
    vae.decoder = mlp2_from_json(j.at("decoder"));
    const json& c = j.at("config");
    vae.config.kl_weight = c.at("kl_weight").get<double>();
    vae.config.epochs_per_round = c.at("epochs_per_round").get<int>();
    vae.config.warmup_epochs = c.at("warmup_epochs").get<int>();
    vae.config.max_rounds = c.at("max_rounds").get<int>();
    vae.config.batch_size = c.at("batch_size").get<int>();
    vae.config.learning_rate = c.at("learning_rate").get<double>();
    vae.config.latent_dim = c.at("latent_dim").get<int>();
    vae.config.hidden_size = c.at("hidden_size").get<int>();
    vae.config.alpha_acyc = c.at("alpha_acyc").get<double>();
    vae.config.lambda_init = c.at("lambda_init").get<double>();
    vae.config.penalty_init = c.at("penalty_init").get<double>();
    vae.config.penalty_growth = c.at("penalty_growth").get<double>();
    vae.config.h_tolerance = c.at("h_tolerance").get<double>();
    vae.config.shrink_factor = c.at("shrink_factor").get<double>();
    vae.config.seed = c.at("seed").get<std::uint64_t>();
    return vae;
}

}  // namespace rcf
