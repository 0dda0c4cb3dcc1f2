#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "rcf/causal_vae.hpp"
#include "test_util.hpp"

using namespace rcf;
using rcf::testutil::random_matrix;

namespace {

CausalVae fresh_vae(Eigen::Index L, int hidden, int d, std::uint64_t seed) {
    Rng rng(seed);
    CausalVae vae;
    vae.adjacency = ad::Parameter(Matrix::Zero(L, L));
    vae.latent_dim = d;
    vae.encoder = nn::make_mlp2(1, hidden, 2 * d, rng);
    vae.decoder = nn::make_mlp2(d, hidden, 1, rng);
    vae.alpha_acyc = 1.0 / double(L);
    return vae;
}

Dataset constant_rows_dataset(int n, Eigen::Index L) {
    Dataset data;
    data.name = "constant";
    data.raw_features = Matrix::Zero(n, L);
    // Identical rows after standardization is impossible (zero variance), so
    // build the standardized view directly around a fixed pattern.
    Matrix row(1, L);
    for (Eigen::Index j = 0; j < L; ++j) row(0, j) = 0.3 * double(j) - 0.5;
    for (int i = 0; i < n; ++i) data.raw_features.row(i) = row;
    data.features = data.raw_features;
    data.standardizer.mean = Eigen::VectorXd::Zero(L);
    data.standardizer.stdev = Eigen::VectorXd::Ones(L);
    data.labels.assign(std::size_t(n), 0);
    for (Eigen::Index j = 0; j < L; ++j) data.feature_names.push_back("f" + std::to_string(j));
    data.split.train.resize(std::size_t(n));
    std::iota(data.split.train.begin(), data.split.train.end(), 0);
    return data;
}

}  // namespace

TEST_CASE("with zero adjacency the encoder is the per-attribute MLP") {
    CausalVae vae = fresh_vae(4, 8, 3, 1);
    Rng rng(2);
    Matrix x = random_matrix(6, 4, rng);

    ad::Tape tape;
    EncodeOut enc = vae_encode(tape, vae, tape.constant(x));

    // Reference: run the MLP alone on the flattened column.
    ad::Tape ref;
    Matrix flat = Eigen::Map<const Matrix>(x.data(), 24, 1);
    Matrix h = nn::forward(ref, vae.encoder, ref.constant(flat)).value();
    Matrix mean_ref = h.leftCols(3);
    Matrix logvar_ref = h.rightCols(3);

    CHECK((enc.mean.value() - mean_ref).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((enc.logvar.value() - logvar_ref).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("encode output shapes are (batch*L) x d for both halves") {
    CausalVae vae = fresh_vae(5, 8, 4, 3);
    Rng rng(4);
    Matrix x = random_matrix(7, 5, rng);
    ad::Tape tape;
    EncodeOut enc = vae_encode(tape, vae, tape.constant(x));
    CHECK(enc.mean.rows() == 35);
    CHECK(enc.mean.cols() == 4);
    CHECK(enc.logvar.rows() == 35);
    CHECK(enc.logvar.cols() == 4);
}

TEST_CASE("with zero adjacency decode reduces to the per-attribute MLP") {
    CausalVae vae = fresh_vae(4, 8, 3, 5);
    Rng rng(6);
    Matrix z = random_matrix(12, 3, rng);  // batch 3, L 4
    ad::Tape tape;
    ad::Tensor xhat = vae_decode(tape, vae, tape.constant(z), 3);
    CHECK(xhat.rows() == 3);
    CHECK(xhat.cols() == 4);

    ad::Tape ref;
    Matrix h = nn::forward(ref, vae.decoder, ref.constant(z)).value();
    Matrix expected = Eigen::Map<const Matrix>(h.data(), 3, 4);
    CHECK((xhat.value() - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("elbo KL term frozen examples") {
    // Zero mean / zero logvar posterior has zero KL; a single latent with
    // mean 2 and unit variance has KL = 0.5 * (4 + 1 - 1 - 0) = 2.
    CausalVae vae = fresh_vae(1, 4, 1, 7);
    // Force encoder output: weights zero, bias = (mean, logvar).
    vae.encoder.l1.weight.value.setZero();
    vae.encoder.l1.bias.value.setZero();
    vae.encoder.l2.weight.value.setZero();

    SUBCASE("mean 0, logvar 0 gives KL 0") {
        vae.encoder.l2.bias.value << 0.0, 0.0;
        ad::Tape tape;
        Matrix x = Matrix::Zero(1, 1);
        ElboParts parts = elbo_loss(tape, vae, tape.constant(x), Matrix::Zero(1, 1), false);
        CHECK(parts.kl.scalar() == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("mean 2, logvar 0 gives KL 2") {
        vae.encoder.l2.bias.value << 2.0, 0.0;
        ad::Tape tape;
        Matrix x = Matrix::Zero(1, 1);
        ElboParts parts = elbo_loss(tape, vae, tape.constant(x), Matrix::Zero(1, 1), false);
        CHECK(parts.kl.scalar() == doctest::Approx(2.0));
    }
    SUBCASE("perfect reconstruction with zero KL leaves only the constant") {
        // Decoder output bias equals the input value; encoder emits N(0, 1).
        vae.encoder.l2.bias.value << 0.0, 0.0;
        vae.decoder.l1.weight.value.setZero();
        vae.decoder.l1.bias.value.setZero();
        vae.decoder.l2.weight.value.setZero();
        vae.decoder.l2.bias.value << 0.7;
        ad::Tape tape;
        Matrix x = Matrix::Constant(1, 1, 0.7);
        ElboParts parts = elbo_loss(tape, vae, tape.constant(x), Matrix::Zero(1, 1), false);
        CHECK(parts.loss.scalar() == doctest::Approx(0.0).epsilon(1e-14));
    }
}

TEST_CASE("gradient of the KL term w.r.t. encoder weights matches finite differences") {
    Rng rng(8);
    const Matrix x = random_matrix(3, 2, rng);
    auto build_kl = [&](const std::vector<Matrix>& weights) {
        CausalVae vae = fresh_vae(2, 4, 2, 9);
        vae.encoder.l1.weight.value = weights[0];
        vae.encoder.l2.weight.value = weights[1];
        ad::Tape tape;
        ElboParts parts = elbo_loss(tape, vae, tape.constant(x), Matrix::Zero(6, 2), false);
        return parts.kl.scalar();
    };
    CausalVae vae = fresh_vae(2, 4, 2, 9);
    ad::Tape tape;
    ElboParts parts = elbo_loss(tape, vae, tape.constant(x), Matrix::Zero(6, 2), true);
    tape.backward(parts.kl);

    const auto fd = rcf::testutil::finite_difference(
        build_kl, {vae.encoder.l1.weight.value, vae.encoder.l2.weight.value});
    CHECK(rcf::testutil::max_rel_error(vae.encoder.l1.weight.grad, fd[0]) < 1e-4);
    CHECK(rcf::testutil::max_rel_error(vae.encoder.l2.weight.grad, fd[1]) < 1e-4);
}

TEST_CASE("reparameterized sample with logvar -20 is deterministic in practice") {
    CausalVae vae = fresh_vae(2, 4, 2, 10);
    vae.encoder.l2.weight.value.setZero();
    // mean (0.4, -0.2), logvar -20 for both latents
    vae.encoder.l2.bias.value << 0.4, -0.2, -20.0, -20.0;

    Matrix x = Matrix::Constant(1, 2, 0.5);
    Rng rng(11);
    Matrix eps1 = random_matrix(2, 2, rng, -4.0, 4.0);
    Matrix eps2 = random_matrix(2, 2, rng, -4.0, 4.0);

    auto sample = [&](const Matrix& eps) {
        ad::Tape tape;
        EncodeOut enc = vae_encode(tape, vae, tape.constant(x));
        ad::Tensor sigma = ad::exp(ad::scale(enc.logvar, 0.5));
        return ad::add(enc.mean, ad::hadamard(sigma, tape.constant(eps))).value();
    };
    CHECK((sample(eps1) - sample(eps2)).cwiseAbs().maxCoeff() < 1e-3);
    CHECK((sample(eps1) - encode_mean(vae, x)).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("acyclicity penalty of the masked adjacency is never negative") {
    Rng rng(12);
    for (int it = 0; it < 50; ++it) {
        CausalVae vae = fresh_vae(4, 4, 2, 13);
        vae.adjacency.value = random_matrix(4, 4, rng, -2.0, 2.0);
        vae.adjacency.value.diagonal().setZero();
        CHECK(acyclicity_value(vae) >= 0.0);
    }
}

TEST_CASE("training a dataset of identical rows memorizes the constant") {
    const Dataset data = constant_rows_dataset(64, 3);
    VaeTrainConfig cfg;
    cfg.epochs_per_round = 1000;
    cfg.max_rounds = 2;
    cfg.warmup_epochs = 800;
    cfg.batch_size = 16;
    cfg.learning_rate = 1e-2;
    cfg.latent_dim = 2;
    cfg.hidden_size = 8;
    cfg.seed = 14;
    const CausalVae vae = train_vae(data, cfg);
    CHECK(reconstruction_mse(vae, data.features) < 1e-3);
}

TEST_CASE("adjacency diagonal stays exactly zero through training") {
    const Dataset data = generate_toy(800, 21);
    VaeTrainConfig cfg;
    cfg.epochs_per_round = 3;
    cfg.max_rounds = 3;
    cfg.batch_size = 64;
    cfg.seed = 21;
    const CausalVae vae = train_vae(data, cfg);
    CHECK(vae.adjacency.value.diagonal().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("vae training is deterministic") {
    const Dataset data = generate_toy(400, 22);
    VaeTrainConfig cfg;
    cfg.epochs_per_round = 2;
    cfg.max_rounds = 2;
    cfg.batch_size = 64;
    cfg.seed = 5;
    const CausalVae a = train_vae(data, cfg);
    const CausalVae b = train_vae(data, cfg);
    CHECK(a.adjacency.value == b.adjacency.value);
    CHECK(a.encoder.l1.weight.value == b.encoder.l1.weight.value);
    CHECK(a.decoder.l2.weight.value == b.decoder.l2.weight.value);
}

TEST_CASE("vae serialization round trip") {
    const Dataset data = generate_toy(400, 23);
    VaeTrainConfig cfg;
    cfg.epochs_per_round = 2;
    cfg.max_rounds = 1;
    cfg.seed = 23;
    const CausalVae a = train_vae(data, cfg);
    const auto path = (std::filesystem::temp_directory_path() / "rcf_vae.json").string();
    save_vae(a, path);
    const CausalVae b = load_vae(path);
    std::filesystem::remove(path);
    CHECK(a.adjacency.value == b.adjacency.value);
    CHECK(a.encoder.l2.weight.value == b.encoder.l2.weight.value);
    CHECK(a.decoder.l1.weight.value == b.decoder.l1.weight.value);
    CHECK(a.latent_dim == b.latent_dim);
    CHECK(a.alpha_acyc == b.alpha_acyc);
    Rng rng(24);
    Matrix x = random_matrix(4, 5, rng);
    CHECK(reconstruct(a, x) == reconstruct(b, x));
}
