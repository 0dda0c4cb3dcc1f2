#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rcf/baselines.hpp"
#include "rcf/cf_engine.hpp"
#include "test_util.hpp"

using namespace rcf;

namespace {

// Hand-built 1-D threshold classifier: probability of class 1 is
// sigmoid(w * x), decision boundary at x = 0. Uses relu(x) - relu(-x) = x.
ClassifierModel threshold_1d(double w) {
    ClassifierModel m;
    Matrix w1(1, 2);
    w1 << 1.0, -1.0;
    m.mlp.l1.weight = ad::Parameter(w1);
    m.mlp.l1.bias = ad::Parameter(Matrix::Zero(1, 2));
    Matrix w2(2, 2);
    // logits = (0, w*x): column 1 gets w*(h1 - h2)
    w2 << 0.0, w, 0.0, -w;
    m.mlp.l2.weight = ad::Parameter(w2);
    m.mlp.l2.bias = ad::Parameter(Matrix::Zero(1, 2));
    m.standardizer_ref = "unit";
    return m;
}

Standardizer unit_standardizer(Eigen::Index L) {
    Standardizer s;
    s.mean = Eigen::VectorXd::Zero(L);
    s.stdev = Eigen::VectorXd::Ones(L);
    return s;
}

// Axis-aligned 2-D classifier: class 1 iff x0 > 1 (boundary at 1).
ClassifierModel boundary_2d() {
    ClassifierModel m;
    Matrix w1(2, 2);
    w1 << 1.0, -1.0, 0.0, 0.0;
    m.mlp.l1.weight = ad::Parameter(w1);
    Matrix b1(1, 2);
    b1 << -1.0, 1.0;  // relu(x0 - 1), relu(1 - x0)
    m.mlp.l1.bias = ad::Parameter(b1);
    Matrix w2(2, 2);
    w2 << 0.0, 4.0, 0.0, -4.0;
    m.mlp.l2.weight = ad::Parameter(w2);
    m.mlp.l2.bias = ad::Parameter(Matrix::Zero(1, 2));
    m.standardizer_ref = "unit";
    return m;
}

}  // namespace

TEST_CASE("lambda = 0 keeps the query pinned exactly") {
    const ClassifierModel m = threshold_1d(4.0);
    const Standardizer s = unit_standardizer(1);
    PlainCfConfig cfg;
    cfg.lambda = 0.0;
    cfg.steps = 100;
    Eigen::RowVectorXd x(1);
    x << -1.0;
    const auto r = plain_cf(m, s, x, 1, cfg);
    CHECK(r.counterfactual(0) == -1.0);
    CHECK(r.predicted_cf_label == 0);
    CHECK_FALSE(r.valid());
    CHECK_FALSE(r.note.empty());
}

TEST_CASE("1-D threshold search crosses the boundary near the grid-search optimum") {
    const ClassifierModel m = threshold_1d(4.0);
    const Standardizer s = unit_standardizer(1);
    PlainCfConfig cfg;
    cfg.lambda = 5.0;
    cfg.steps = 400;
    Eigen::RowVectorXd x(1);
    x << -1.0;
    const auto r = plain_cf(m, s, x, 1, cfg);

    CHECK(r.predicted_cf_label == 1);
    CHECK(std::abs(r.counterfactual(0) - (-1.0)) <= 1.5);

    // Independent oracle: dense grid over the same 1-D objective restricted
    // to valid points (prediction == target).
    double best_obj = std::numeric_limits<double>::infinity();
    double best_x = 0.0;
    for (double xc = -3.0; xc <= 3.0; xc += 1e-4) {
        Matrix q(1, 1);
        q(0, 0) = xc;
        const Matrix p = predict_proba(m, q);
        if (!(p(0, 1) > p(0, 0))) continue;
        Eigen::RowVectorXd row = p.row(0);
        const double obj = cfg.lambda * hinge_class_loss(row, 1, cfg.beta) +
                           (xc - x(0)) * (xc - x(0));
        if (obj < best_obj) {
            best_obj = obj;
            best_x = xc;
        }
    }
    CHECK(std::abs(r.counterfactual(0) - best_x) < 0.05);
}

TEST_CASE("knn_weight = 0 reproduces the plain trajectory") {
    const ClassifierModel m = boundary_2d();
    const Standardizer s = unit_standardizer(2);
    PlainCfConfig cfg;
    cfg.lambda = 5.0;
    cfg.steps = 200;
    cfg.knn_weight = 0.0;
    cfg.k = 3;
    Eigen::RowVectorXd x(2);
    x << 0.0, 0.0;

    Matrix train(6, 2);
    train << 3, 0, 3.2, 0.4, 2.8, -0.2, -1, 0, -1.2, 0.2, -0.8, -0.4;
    const std::vector<int> labels = {1, 1, 1, 0, 0, 0};

    const auto a = plain_cf(m, s, x, 1, cfg);
    const auto b = plain_cf_k(m, s, x, 1, train, labels, cfg);
    CHECK((a.counterfactual - b.counterfactual).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("knn term pulls the counterfactual toward the target cluster") {
    const ClassifierModel m = boundary_2d();
    const Standardizer s = unit_standardizer(2);
    PlainCfConfig cfg;
    cfg.lambda = 5.0;
    cfg.steps = 300;
    cfg.k = 3;
    Eigen::RowVectorXd x(2);
    x << 0.0, 0.0;

    Matrix train(6, 2);
    train << 3, 1, 3.2, 1.4, 2.8, 0.8, -1, 0, -1.2, 0.2, -0.8, -0.4;
    const std::vector<int> labels = {1, 1, 1, 0, 0, 0};
    const Eigen::RowVectorXd centroid = (train.row(0) + train.row(1) + train.row(2)) / 3.0;

    cfg.knn_weight = 0.0;
    const auto plain = plain_cf_k(m, s, x, 1, train, labels, cfg);
    cfg.knn_weight = 0.5;
    const auto pulled = plain_cf_k(m, s, x, 1, train, labels, cfg);

    CHECK(pulled.valid());
    CHECK((pulled.counterfactual - centroid).norm() < (plain.counterfactual - centroid).norm());
}

TEST_CASE("plain_cf_k requires k target-class samples") {
    const ClassifierModel m = boundary_2d();
    const Standardizer s = unit_standardizer(2);
    PlainCfConfig cfg;
    cfg.k = 5;
    Matrix train(3, 2);
    train << 3, 0, -1, 0, -2, 0;
    const std::vector<int> labels = {1, 0, 0};
    Eigen::RowVectorXd x(2);
    x << 0, 0;
    CHECK_THROWS_AS(plain_cf_k(m, s, x, 1, train, labels, cfg), DataError);
}

TEST_CASE("searches never mutate black-box parameters") {
    const ClassifierModel m = boundary_2d();
    const Matrix before = m.mlp.l1.weight.value;
    const Standardizer s = unit_standardizer(2);
    PlainCfConfig cfg;
    cfg.steps = 50;
    Eigen::RowVectorXd x(2);
    x << 0, 0;
    plain_cf(m, s, x, 1, cfg);
    CHECK(m.mlp.l1.weight.value == before);
    CHECK_FALSE(m.mlp.l1.weight.has_grad);
}

TEST_CASE("search is deterministic") {
    const ClassifierModel m = boundary_2d();
    const Standardizer s = unit_standardizer(2);
    PlainCfConfig cfg;
    cfg.lambda = 2.0;
    cfg.steps = 120;
    Eigen::RowVectorXd x(2);
    x << -0.3, 0.7;
    const auto a = plain_cf(m, s, x, 1, cfg);
    const auto b = plain_cf(m, s, x, 1, cfg);
    CHECK(a.counterfactual == b.counterfactual);
    CHECK(a.delta_norm == b.delta_norm);
}
