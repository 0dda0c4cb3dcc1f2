#include "rcf/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rcf {

using ad::Tape;
using ad::Tensor;

namespace {

struct SearchExtras {
    const Matrix* pool = nullptr;  // target-class standardized samples
    int k = 0;
    double knn_weight = 0.0;
};

// k nearest pool rows to x by squared Euclidean distance.
Matrix nearest_rows(const Matrix& pool, const Eigen::RowVectorXd& x, int k) {
    Eigen::VectorXd d2(pool.rows());
    for (Eigen::Index i = 0; i < pool.rows(); ++i) {
        d2(i) = (pool.row(i) - x).squaredNorm();
    }
    std::vector<int> idx(std::size_t(pool.rows()));
    std::iota(idx.begin(), idx.end(), 0);
    std::nth_element(idx.begin(), idx.begin() + (k - 1), idx.end(),
                     [&](int a, int b) { return d2(a) < d2(b); });
    Matrix nb(k, pool.cols());
    for (int i = 0; i < k; ++i) nb.row(i) = pool.row(idx[std::size_t(i)]);
    return nb;
}

CounterfactualResult search(const ClassifierModel& blackbox, const Standardizer& standardizer,
                            const Eigen::RowVectorXd& x_raw, int y_cf, const PlainCfConfig& config,
                            const SearchExtras& extras) {
    if (config.steps <= 0) throw ConfigError("plain_cf: steps must be positive");
    if (config.lambda < 0.0) throw ConfigError("plain_cf: lambda must be non-negative");

    Matrix x0 = standardizer.transform(Matrix(x_raw));
    const int original_label = predict(blackbox, x0)[0];
    const std::vector<int> target = {y_cf};

    ad::Parameter x_cf(x0);
    auto state = ad::make_adam_state(x_cf, config.learning_rate);
    ad::Parameter* params[] = {&x_cf};

    auto objective = [&](bool with_grad) {
        Tape tape;
        Tensor xt = with_grad ? tape.param(x_cf) : tape.frozen(x_cf);
        // Same log-probability hinge as the engine: logit margins stay
        // informative in saturated regions.
        Tensor logp = ad::log_softmax_rows(classifier_logits(tape, blackbox, xt));
        Tensor hinge = ad::sum(hinge_loss_rows(tape, logp, target, config.beta));
        Tensor dist = ad::l2_norm_sq(ad::sub(tape.constant(x0), xt));
        Tensor obj = ad::add(ad::scale(hinge, config.lambda), dist);
        if (extras.pool) {
            const Matrix nb =
                nearest_rows(*extras.pool, Eigen::RowVectorXd(x_cf.value.row(0)), extras.k);
            Tensor diff = ad::add_rowvec(tape.constant(-nb), xt);
            obj = ad::add(obj, ad::scale(ad::l2_norm_sq(diff), extras.knn_weight / double(extras.k)));
        }
        if (with_grad) tape.backward(obj);
        return obj.scalar();
    };

    double prev_obj = std::numeric_limits<double>::infinity();
    double best_valid_obj = std::numeric_limits<double>::infinity();
    Matrix best_valid = x0;
    bool found_valid = false;
    Matrix snapshot_value = x_cf.value;
    ad::AdamState snapshot_state = state;
    double lr = config.learning_rate;

    std::span<ad::AdamState> states(&state, 1);
    for (int step = 0; step < config.steps; ++step) {
        const double obj = objective(/*with_grad=*/true);
        if (obj > prev_obj) {
            // Reject the move that got us here and retry smaller.
            x_cf.value = snapshot_value;
            state = snapshot_state;
            lr *= 0.5;
            state.learning_rate = lr;
            x_cf.grad.setZero();
            x_cf.has_grad = false;
            if (lr < 1e-12) break;
            continue;
        }
        prev_obj = obj;
        snapshot_value = x_cf.value;
        snapshot_state = state;
        if (predict(blackbox, x_cf.value)[0] == y_cf && obj < best_valid_obj) {
            best_valid_obj = obj;
            best_valid = x_cf.value;
            found_valid = true;
        }
        state.learning_rate = lr;
        ad::adam_step(params, states);
    }

    CounterfactualResult r;
    const Matrix final_std = found_valid ? best_valid : x_cf.value;
    r.original = x_raw;
    r.counterfactual = standardizer.inverse(final_std).row(0);
    r.original_label = original_label;
    r.target_label = y_cf;
    r.predicted_cf_label = predict(blackbox, final_std)[0];
    r.delta_norm = (final_std - x0).norm();
    if (!found_valid) r.note = "no valid iterate reached the target label";
    return r;
}

}  // namespace

CounterfactualResult plain_cf(const ClassifierModel& blackbox, const Standardizer& standardizer,
                              const Eigen::RowVectorXd& x_raw, int y_cf,
                              const PlainCfConfig& config) {
    return search(blackbox, standardizer, x_raw, y_cf, config, SearchExtras{});
}

CounterfactualResult plain_cf_k(const ClassifierModel& blackbox, const Standardizer& standardizer,
                                const Eigen::RowVectorXd& x_raw, int y_cf, const Matrix& train_std,
                                const std::vector<int>& train_labels,
                                const PlainCfConfig& config) {
    if (config.k < 1) throw ConfigError("plain_cf_k: k must be at least 1");
    Eigen::Index count = 0;
    for (int y : train_labels) count += y == y_cf;
    if (count < config.k) {
        throw DataError("plain_cf_k: only " + std::to_string(count) + " training samples of class " +
                        std::to_string(y_cf) + ", need k=" + std::to_string(config.k));
    }
    Matrix pool(count, train_std.cols());
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < train_labels.size(); ++i) {
        if (train_labels[i] == y_cf) pool.row(at++) = train_std.row(Eigen::Index(i));
    }
    SearchExtras extras;
    extras.pool = &pool;
    extras.k = config.k;
    extras.knn_weight = config.knn_weight;
    return search(blackbox, standardizer, x_raw, y_cf, config, extras);
}

}  // namespace rcf
