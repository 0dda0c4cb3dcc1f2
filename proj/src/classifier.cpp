#include "rcf/classifier.hpp"

#include <algorithm>
#include <limits>
#include <json.hpp>

#include "rcf/csv.hpp"
#include "rcf/serialize.hpp"

namespace rcf {

using ad::Tape;
using ad::Tensor;
using nlohmann::json;

namespace {

Matrix one_hot(const std::vector<int>& labels, int classes) {
    Matrix m = Matrix::Zero(Eigen::Index(labels.size()), classes);
    for (std::size_t i = 0; i < labels.size(); ++i) m(Eigen::Index(i), labels[i]) = 1.0;
    return m;
}

}  // namespace

ad::Tensor classifier_logits(Tape& tape, const ClassifierModel& model, const Tensor& x) {
    if (x.cols() != model.num_features()) {
        throw ShapeError("classifier: input has " + std::to_string(x.cols()) +
                         " features, model expects " + std::to_string(model.num_features()));
    }
    return nn::forward(tape, model.mlp, x);
}

ad::Tensor classifier_proba(Tape& tape, const ClassifierModel& model, const Tensor& x) {
    return ad::softmax_rows(classifier_logits(tape, model, x));
}

Matrix predict_proba(const ClassifierModel& model, const Matrix& x) {
    Tape tape;
    return classifier_proba(tape, model, tape.constant(x)).value();
}

std::vector<int> predict(const ClassifierModel& model, const Matrix& x) {
    const Matrix p = predict_proba(model, x);
    std::vector<int> labels(std::size_t(p.rows()));
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        labels[std::size_t(i)] = p(i, 0) >= p(i, 1) ? 0 : 1;  // ties go to 0
    }
    return labels;
}

int predict_one(const ClassifierModel& model, const Eigen::RowVectorXd& x) {
    Matrix m = x;
    return predict(model, m)[0];
}

double accuracy(const ClassifierModel& model, const Matrix& x, const std::vector<int>& labels) {
    const auto pred = predict(model, x);
    int hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += pred[i] == labels[i];
    return labels.empty() ? 0.0 : double(hits) / double(labels.size());
}

ClassifierModel train_classifier(const Dataset& data, const ClassifierConfig& config,
                                 ClassifierReport* report) {
    const Matrix train_x = data.gather(data.split.train);
    const std::vector<int> train_y = data.gather_labels(data.split.train);
    if (train_y.empty()) throw DataError("classifier: empty training split");
    const int first = train_y.front();
    if (std::all_of(train_y.begin(), train_y.end(), [&](int y) { return y == first; })) {
        throw DataError("classifier: training split contains a single class");
    }

    Rng rng = Rng(config.seed).derive("classifier");
    ClassifierModel model;
    model.mlp = nn::make_mlp2(data.num_attributes(), config.hidden_size, 2, rng);
    model.config = config;
    model.standardizer_ref = data.standardizer.fingerprint();

    auto params = nn::parameters(model.mlp);
    auto states = nn::make_adam_states(params, config.learning_rate);

    const Matrix val_x = data.gather(data.split.val);
    const std::vector<int> val_y = data.gather_labels(data.split.val);
    const bool use_early_stop = config.patience > 0 && !val_y.empty();
    Matrix val_onehot = one_hot(val_y, 2);

    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    std::vector<Matrix> best_weights;
    auto snapshot = [&]() {
        best_weights.clear();
        for (auto* p : params) best_weights.push_back(p->value);
    };

    std::vector<int> order(train_y.size());
    std::iota(order.begin(), order.end(), 0);

    ClassifierReport local;
    ClassifierReport& rep = report ? *report : local;
    rep.loss_curve.clear();

    const Eigen::Index n = train_x.rows();
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        Eigen::Index done = 0;
        while (done < n) {
            const Eigen::Index bs = std::min<Eigen::Index>(config.batch_size, n - done);
            Matrix bx(bs, train_x.cols());
            std::vector<int> by(static_cast<std::size_t>(bs));
            for (Eigen::Index i = 0; i < bs; ++i) {
                bx.row(i) = train_x.row(order[std::size_t(done + i)]);
                by[std::size_t(i)] = train_y[std::size_t(order[std::size_t(done + i)])];
            }
            done += bs;

            Tape tape;
            Tensor x = tape.constant(std::move(bx));
            Tensor logits = nn::forward(tape, model.mlp, x, /*train=*/true);
            Tensor logp = ad::log_softmax_rows(logits);
            Tensor picked = ad::hadamard(logp, tape.constant(one_hot(by, 2)));
            Tensor loss = ad::scale(ad::sum(picked), -1.0 / double(bs));
            tape.backward(loss);
            epoch_loss += loss.scalar() * double(bs);
            ad::adam_step(params, states);
        }
        rep.loss_curve.push_back(epoch_loss / double(n));
        rep.epochs_run = epoch + 1;

        if (use_early_stop) {
            // Validation cross-entropy; accuracy plateaus too early on
            // imbalanced labels to be a useful stopping signal.
            Tape vt;
            Tensor vlogp = ad::log_softmax_rows(nn::forward(vt, model.mlp, vt.constant(val_x)));
            const double vloss = -(vlogp.value().cwiseProduct(val_onehot)).sum() / double(val_y.size());
            if (vloss < best_val) {
                best_val = vloss;
                best_epoch = epoch;
                snapshot();
            } else if (epoch - best_epoch >= config.patience) {
                break;
            }
        }
    }
    if (use_early_stop && !best_weights.empty()) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_weights[i];
    }

    rep.train_accuracy = accuracy(model, train_x, train_y);
    rep.val_accuracy = val_y.empty() ? 0.0 : accuracy(model, val_x, val_y);
    const std::vector<int> test_y = data.gather_labels(data.split.test);
    rep.test_accuracy = test_y.empty() ? 0.0 : accuracy(model, data.gather(data.split.test), test_y);
    return model;
}

void save_classifier(const ClassifierModel& model, const std::string& path) {
    json j;
    j["kind"] = "classifier";
    j["hidden_size"] = model.config.hidden_size;
    j["config"] = {{"hidden_size", model.config.hidden_size},
                   {"learning_rate", model.config.learning_rate},
                   {"epochs", model.config.epochs},
                   {"batch_size", model.config.batch_size},
                   {"patience", model.config.patience},
                   {"seed", model.config.seed}};
    j["standardizer_ref"] = model.standardizer_ref;
    j["mlp"] = to_json(model.mlp);
    write_text_file(path, j.dump(2) + "\n");
}

ClassifierModel load_classifier(const std::string& path) {
    const json j = json::parse(read_text_file(path));
    if (j.at("kind") != "classifier") throw ParseError(path + ": not a classifier file");
    ClassifierModel model;
    const json& c = j.at("config");
    model.config.hidden_size = c.at("hidden_size").get<int>();
    model.config.learning_rate = c.at("learning_rate").get<double>();
    model.config.epochs = c.at("epochs").get<int>();
    model.config.batch_size = c.at("batch_size").get<int>();
    model.config.patience = c.at("patience").get<int>();
    model.config.seed = c.at("seed").get<std::uint64_t>();
    model.standardizer_ref = j.at("standardizer_ref").get<std::string>();
    model.mlp = mlp2_from_json(j.at("mlp"));
    return model;
}

}  // namespace rcf
