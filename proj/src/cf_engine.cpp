#include "rcf/cf_engine.hpp"

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

constexpr double kProbClamp = 1e-7;

Matrix one_hot(const std::vector<int>& labels, int classes) {
    Matrix m = Matrix::Zero(Eigen::Index(labels.size()), classes);
    for (std::size_t i = 0; i < labels.size(); ++i) m(Eigen::Index(i), labels[i]) = 1.0;
    return m;
}

PerturbOut perturb_impl(Tape& tape, const ModulationNet& mod, const CausalVae& vae,
                        const Tensor& x, const std::vector<int>& y_cf, bool train_mod) {
    const Eigen::Index batch = x.rows();
    const Eigen::Index L = vae.num_attributes();
    const int d = vae.latent_dim;
    if (Eigen::Index(y_cf.size()) != batch) {
        throw ShapeError("perturb_latent: " + std::to_string(y_cf.size()) + " targets for " +
                         std::to_string(batch) + " rows");
    }
    EncodeOut enc = vae_encode(tape, vae, x);  // frozen; posterior mean only
    Tensor input = ad::concat_cols(x, tape.constant(one_hot(y_cf, 2)));
    Tensor raw = train_mod ? nn::forward(tape, const_cast<ModulationNet&>(mod).mlp, input, true)
                           : nn::forward(tape, mod.mlp, input);
    PerturbOut out;
    out.delta = ad::reshape(ad::scale(raw, mod.gamma), batch * L, d);
    out.z = enc.mean;
    out.z_cf = ad::add(enc.mean, out.delta);
    return out;
}

// Discriminator probability for flattened latents, clamped away from {0, 1}.
Tensor discriminator_proba(Tape& tape, const Discriminator& dis, const Tensor& flat,
                           bool train_dis) {
    Tensor logits = train_dis ? nn::forward(tape, const_cast<Discriminator&>(dis).mlp, flat, true)
                              : nn::forward(tape, dis.mlp, flat);
    return ad::clamp(ad::sigmoid(logits), kProbClamp, 1.0 - kProbClamp);
}

}  // namespace

// Per-row hinge on a 2-class probability tensor: relu(s_other - s_target + beta) - beta.
Tensor hinge_loss_rows(Tape& tape, const Tensor& proba, const std::vector<int>& y_cf, double beta) {
    if (beta <= 0.0) throw DomainError("hinge_loss_rows: beta must be positive");
    if (proba.cols() != 2 || Eigen::Index(y_cf.size()) != proba.rows()) {
        throw ShapeError("hinge_loss_rows: expected batch x 2 probabilities with one target per row");
    }
    std::vector<int> other(y_cf.size());
    for (std::size_t i = 0; i < y_cf.size(); ++i) other[i] = 1 - y_cf[i];
    Tensor s_t = ad::rowwise_sum(ad::hadamard(proba, tape.constant(one_hot(y_cf, 2))));
    Tensor s_o = ad::rowwise_sum(ad::hadamard(proba, tape.constant(one_hot(other, 2))));
    return ad::add_scalar(ad::relu(ad::add_scalar(ad::sub(s_o, s_t), beta)), -beta);
}

PerturbOut perturb_latent(Tape& tape, ModulationNet& mod, const CausalVae& vae, const Tensor& x,
                          const std::vector<int>& y_cf, bool train_mod) {
    return perturb_impl(tape, mod, vae, x, y_cf, train_mod);
}

PerturbOut perturb_latent(Tape& tape, const ModulationNet& mod, const CausalVae& vae,
                          const Tensor& x, const std::vector<int>& y_cf) {
    return perturb_impl(tape, mod, vae, x, y_cf, false);
}

double hinge_class_loss(const Eigen::RowVectorXd& scores, int y_cf, double beta) {
    if (beta <= 0.0) throw DomainError("hinge_class_loss: beta must be positive");
    if (y_cf < 0 || y_cf >= scores.size()) throw ShapeError("hinge_class_loss: target out of range");
    double other = -std::numeric_limits<double>::infinity();
    for (Eigen::Index y = 0; y < scores.size(); ++y) {
        if (int(y) != y_cf) other = std::max(other, scores(y));
    }
    return std::max(other - scores(y_cf), -beta);
}

double nearest_loss(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& x_cf,
                    const Eigen::RowVectorXd& delta_flat) {
    if (x.size() != x_cf.size()) throw ShapeError("nearest_loss: size mismatch");
    return (x - x_cf).squaredNorm() + delta_flat.squaredNorm();
}

std::pair<double, double> adversarial_losses(const Discriminator& dis, const Matrix& z_batch,
                                             const Matrix& z_cf_batch) {
    Tape tape;
    const Matrix real = discriminator_proba(tape, dis, tape.constant(z_batch), false).value();
    const Matrix fake = discriminator_proba(tape, dis, tape.constant(z_cf_batch), false).value();
    const double mod_loss = -fake.array().log().mean();
    const double dis_loss = -(real.array().log() + (1.0 - fake.array()).log()).mean();
    return {mod_loss, dis_loss};
}

CfEngine train_cf(const CausalVae& vae, const ClassifierModel& blackbox, const Dataset& data,
                  const CfTrainConfig& config, CfTrainReport* report) {
    if (vae.standardizer_ref != blackbox.standardizer_ref) {
        throw StateError("train_cf: VAE and black box were trained under different standardizers");
    }
    const Eigen::Index L = data.num_attributes();
    const int d = vae.latent_dim;
    const Matrix train_x = data.gather(data.split.train);
    if (train_x.rows() == 0) throw DataError("train_cf: empty training split");

    Rng init_rng = Rng(config.seed).derive("cf-init");
    Rng shuffle_rng = Rng(config.seed).derive("cf-shuffle");

    CfEngine engine;
    engine.mod.mlp = nn::make_mlp2(L + 2, config.hidden_size, L * d, init_rng);
    engine.mod.gamma = config.gamma;
    engine.dis.mlp = nn::make_mlp2(L * d, config.hidden_size, 1, init_rng);
    engine.config = config;
    engine.standardizer_ref = vae.standardizer_ref;

    auto mod_params = nn::parameters(engine.mod.mlp);
    auto dis_params = nn::parameters(engine.dis.mlp);
    auto mod_states = nn::make_adam_states(mod_params, config.learning_rate_mod);
    auto dis_states = nn::make_adam_states(dis_params, config.learning_rate_dis);

    CfTrainReport local;
    CfTrainReport& rep = report ? *report : local;
    rep = CfTrainReport{};

    const std::vector<int> train_pred = predict(blackbox, train_x);

    std::vector<int> order(train_pred.size());
    std::iota(order.begin(), order.end(), 0);

    const Eigen::Index n = train_x.rows();
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double e_total = 0.0, e_hinge = 0.0, e_near = 0.0, e_adv = 0.0, e_dis = 0.0;
        Eigen::Index done = 0;
        long step_index = 0;
        while (done < n) {
            const Eigen::Index bs = std::min<Eigen::Index>(config.batch_size, n - done);
            Matrix bx(bs, L);
            std::vector<int> y_cf(static_cast<std::size_t>(bs));
            for (Eigen::Index i = 0; i < bs; ++i) {
                const int row = order[std::size_t(done + i)];
                bx.row(i) = train_x.row(row);
                y_cf[std::size_t(i)] = 1 - train_pred[std::size_t(row)];  // flip the prediction
            }
            done += bs;

            // Discriminator step on current modulation output.
            if (config.dis_every > 0 && step_index % config.dis_every == 0) {
                Tape tape;
                Tensor x = tape.constant(bx);
                PerturbOut p = perturb_latent(tape, engine.mod, vae, x, y_cf);
                Tensor real = discriminator_proba(tape, engine.dis,
                                                  ad::reshape(p.z, bs, L * d), true);
                Tensor fake = discriminator_proba(tape, engine.dis,
                                                  ad::reshape(p.z_cf, bs, L * d), true);
                Tensor ones = tape.constant(Matrix::Ones(bs, 1));
                Tensor dis_loss = ad::scale(
                    ad::add(ad::sum(ad::log(real)), ad::sum(ad::log(ad::sub(ones, fake)))),
                    -1.0 / double(bs));
                tape.backward(dis_loss);
                e_dis += dis_loss.scalar() * double(bs);
                ad::adam_step(dis_params, dis_states);
            }

            // Modulation step on the combined objective; everything else frozen.
            {
                Tape tape;
                Tensor x = tape.constant(bx);
                PerturbOut p = perturb_impl(tape, engine.mod, vae, x, y_cf, true);
                Tensor x_cf = vae_decode(tape, vae, p.z_cf, bs);
                // Hinge on log-probabilities: the binary margin is the logit
                // difference, which keeps gradients alive where the softmax
                // saturates.
                Tensor logp = ad::log_softmax_rows(classifier_logits(tape, blackbox, x_cf));
                Tensor hinge = ad::mean(hinge_loss_rows(tape, logp, y_cf, config.beta));
                Tensor near = ad::add(ad::mean(ad::square(ad::sub(x, x_cf))),
                                      ad::mean(ad::square(p.delta)));
                Tensor fake = discriminator_proba(tape, engine.dis,
                                                  ad::reshape(p.z_cf, bs, L * d), false);
                Tensor adv = ad::scale(ad::sum(ad::log(fake)), -1.0 / double(bs));
                Tensor total = ad::add(ad::scale(hinge, config.alpha1),
                                       ad::add(ad::scale(near, config.alpha2),
                                               ad::scale(adv, config.alpha3)));
                tape.backward(total);
                const double v = total.scalar();
                if (!std::isfinite(v)) {
                    throw NumericError("train_cf: non-finite objective at epoch " +
                                       std::to_string(epoch) + " (hinge " +
                                       std::to_string(hinge.scalar()) + ", nearest " +
                                       std::to_string(near.scalar()) + ", adversarial " +
                                       std::to_string(adv.scalar()) + ")");
                }
                e_total += v * double(bs);
                e_hinge += hinge.scalar() * double(bs);
                e_near += near.scalar() * double(bs);
                e_adv += adv.scalar() * double(bs);
                ad::adam_step(mod_params, mod_states);
            }
            ++step_index;
        }
        rep.total_per_epoch.push_back(e_total / double(n));
        rep.hinge_per_epoch.push_back(e_hinge / double(n));
        rep.nearest_per_epoch.push_back(e_near / double(n));
        rep.adversarial_per_epoch.push_back(e_adv / double(n));
        rep.discriminator_per_epoch.push_back(e_dis / double(n));
    }
    return engine;
}

std::vector<CounterfactualResult> generate(const CfEngine& engine, const CausalVae& vae,
                                           const ClassifierModel& blackbox,
                                           const Standardizer& standardizer, const Matrix& x_raw,
                                           std::vector<int> y_cf) {
    if (engine.standardizer_ref != vae.standardizer_ref ||
        vae.standardizer_ref != blackbox.standardizer_ref) {
        throw StateError("generate: engine, VAE and black box do not share a standardizer");
    }
    const Eigen::Index n = x_raw.rows();
    const Eigen::Index L = vae.num_attributes();
    const Matrix x_std = standardizer.transform(x_raw);
    const std::vector<int> original = predict(blackbox, x_std);
    if (y_cf.empty()) {
        y_cf.resize(std::size_t(n));
        for (Eigen::Index i = 0; i < n; ++i) y_cf[std::size_t(i)] = 1 - original[std::size_t(i)];
    }
    if (Eigen::Index(y_cf.size()) != n) throw ShapeError("generate: target count mismatch");

    Tape tape;
    PerturbOut p = perturb_latent(tape, engine.mod, vae, tape.constant(x_std), y_cf);
    Tensor x_cf_std_t = vae_decode(tape, vae, p.z_cf, n);
    const Matrix x_cf_std = x_cf_std_t.value();
    const Matrix x_cf_raw = standardizer.inverse(x_cf_std);
    const std::vector<int> predicted = predict(blackbox, x_cf_std);
    const Matrix& z = p.z.value();
    const Matrix& z_cf = p.z_cf.value();
    const Matrix& delta = p.delta.value();

    std::vector<CounterfactualResult> results(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        CounterfactualResult& r = results[std::size_t(i)];
        r.original = x_raw.row(i);
        r.counterfactual = x_cf_raw.row(i);
        r.original_label = original[std::size_t(i)];
        r.target_label = y_cf[std::size_t(i)];
        r.predicted_cf_label = predicted[std::size_t(i)];
        r.latent = z.middleRows(i * L, L);
        r.latent_cf = z_cf.middleRows(i * L, L);
        r.delta_norm = delta.middleRows(i * L, L).norm();
    }
    return results;
}

void save_cf_engine(const CfEngine& engine, const std::string& path) {
    json j;
    j["kind"] = "cf_engine";
    j["standardizer_ref"] = engine.standardizer_ref;
    j["gamma"] = engine.mod.gamma;
    j["modulation"] = to_json(engine.mod.mlp);
    j["discriminator"] = to_json(engine.dis.mlp);
    j["config"] = {{"alpha1", engine.config.alpha1},
                   {"alpha2", engine.config.alpha2},
                   {"alpha3", engine.config.alpha3},
                   {"beta", engine.config.beta},
                   {"gamma", engine.config.gamma},
                   {"epochs", engine.config.epochs},
                   {"batch_size", engine.config.batch_size},
                   {"dis_every", engine.config.dis_every},
                   {"learning_rate_mod", engine.config.learning_rate_mod},
                   {"learning_rate_dis", engine.config.learning_rate_dis},
                   {"hidden_size", engine.config.hidden_size},
                   {"seed", engine.config.seed}};
    write_text_file(path, j.dump(2) + "\n");
}

CfEngine load_cf_engine(const std::string& path) {
    const json j = json::parse(read_text_file(path));
    if (j.at("kind") != "cf_engine") throw ParseError(path + ": not a cf_engine file");
    CfEngine engine;
    engine.standardizer_ref = j.at("standardizer_ref").get<std::string>();
    engine.mod.gamma = j.at("gamma").get<double>();
    engine.mod.mlp = mlp2_from_json(j.at("modulation"));
    engine.dis.mlp = mlp2_from_json(j.at("discriminator"));
    const json& c = j.at("config");
    engine.config.alpha1 = c.at("alpha1").get<double>();
    engine.config.alpha2 = c.at("alpha2").get<double>();
    engine.config.alpha3 = c.at("alpha3").get<double>();
    engine.config.beta = c.at("beta").get<double>();
    engine.config.gamma = c.at("gamma").get<double>();
    engine.config.epochs = c.at("epochs").get<int>();
    engine.config.batch_size = c.at("batch_size").get<int>();
    engine.config.dis_every = c.at("dis_every").get<int>();
    engine.config.learning_rate_mod = c.at("learning_rate_mod").get<double>();
    engine.config.learning_rate_dis = c.at("learning_rate_dis").get<double>();
    engine.config.hidden_size = c.at("hidden_size").get<int>();
    engine.config.seed = c.at("seed").get<std::uint64_t>();
    return engine;
}

}  // namespace rcf
