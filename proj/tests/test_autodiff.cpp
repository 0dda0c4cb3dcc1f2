#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rcf/autodiff.hpp"
#include "rcf/nn.hpp"
#include "test_util.hpp"

using namespace rcf;
using namespace rcf::ad;
using rcf::testutil::check_gradients;
using rcf::testutil::random_matrix;

namespace {

Matrix mat2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

// DFS cycle oracle over a 0/1 adjacency matrix, independent of the penalty.
bool has_cycle(const Matrix& adj) {
    const int n = int(adj.rows());
    std::vector<int> state(n, 0);  // 0 unvisited, 1 on stack, 2 done
    std::function<bool(int)> dfs = [&](int u) {
        state[u] = 1;
        for (int v = 0; v < n; ++v) {
            if (adj(u, v) == 0.0) continue;
            if (state[v] == 1) return true;
            if (state[v] == 0 && dfs(v)) return true;
        }
        state[u] = 2;
        return false;
    };
    for (int u = 0; u < n; ++u) {
        if (state[u] == 0 && dfs(u)) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("matmul forward matches hand evaluation") {
    Tape t;
    Tensor i2 = t.constant(Matrix::Identity(2, 2));
    Tensor a = t.constant(mat2(1, 2, 3, 4));
    CHECK(matmul(i2, a).value() == mat2(1, 2, 3, 4));

    Tensor b = t.constant(mat2(0, 1, 1, 0));
    Matrix expect = mat2(2, 1, 4, 3);
    CHECK(matmul(a, b).value() == expect);
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
    Tape t;
    Tensor a = t.constant(Matrix::Zero(2, 3));
    Tensor b = t.constant(Matrix::Zero(2, 3));
    CHECK_THROWS_AS(matmul(a, b), ShapeError);
}

TEST_CASE("matmul gradient vs finite differences on random 3x3") {
    Rng rng(11);
    for (int it = 0; it < 5; ++it) {
        auto worst = check_gradients(
            [](Tape&, std::vector<Tensor>& in) { return sum(matmul(in[0], in[1])); },
            {random_matrix(3, 3, rng), random_matrix(3, 3, rng)});
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("inverse of identity and diagonal") {
    Tape t;
    CHECK(inverse(t.constant(Matrix::Identity(3, 3))).value() == Matrix::Identity(3, 3));
    Matrix d = mat2(2, 0, 0, 4);
    Matrix expect = mat2(0.5, 0, 0, 0.25);
    CHECK((inverse(t.constant(d)).value() - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("inverse refuses singular and ill-conditioned input") {
    Tape t;
    CHECK_THROWS_AS(inverse(t.constant(mat2(1, 2, 2, 4))), NumericError);
    Matrix bad = mat2(1, 0, 0, 1e-14);
    CHECK_THROWS_AS(inverse(t.constant(bad)), NumericError);
}

TEST_CASE("inverse satisfies a * a^-1 = I within 1e-8") {
    Rng rng(3);
    for (int it = 0; it < 20; ++it) {
        Matrix a = random_matrix(4, 4, rng);
        a.diagonal().array() += 5.0;  // diagonally dominant
        Tape t;
        Tensor inv = inverse(t.constant(a));
        Matrix prod = a * inv.value();
        CHECK((prod - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("inverse gradient vs finite differences on diagonally dominant 4x4") {
    Rng rng(7);
    for (int it = 0; it < 5; ++it) {
        Matrix a = random_matrix(4, 4, rng);
        a.diagonal().array() += 4.0;
        auto worst = check_gradients(
            [](Tape&, std::vector<Tensor>& in) { return sum(inverse(in[0])); }, {a});
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("acyclicity penalty frozen examples") {
    Tape t;
    SUBCASE("zero matrix gives zero for any size") {
        for (int n : {1, 2, 3, 5}) {
            Tensor a = t.constant(Matrix::Zero(n, n));
            CHECK(acyclicity_penalty(a, 1.0).scalar() == doctest::Approx(0.0).epsilon(1e-14));
        }
    }
    SUBCASE("single edge is acyclic") {
        Tensor a = t.constant(mat2(0, 1, 0, 0));
        CHECK(acyclicity_penalty(a, 1.0).scalar() == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("two-cycle scores 2") {
        Tensor a = t.constant(mat2(0, 1, 1, 0));
        CHECK(acyclicity_penalty(a, 1.0).scalar() == doctest::Approx(2.0));
    }
}

TEST_CASE("acyclicity penalty is a cycle detector on small digraphs") {
    // Brute force over every off-diagonal 0/1 adjacency for n in {2,3,4}
    // against an independent DFS oracle.
    for (int n : {2, 3, 4}) {
        const int slots = n * (n - 1);
        for (long mask = 0; mask < (1L << slots); ++mask) {
            Matrix adj = Matrix::Zero(n, n);
            int bit = 0;
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    if (i == j) continue;
                    if (mask & (1L << bit)) adj(i, j) = 1.0;
                    ++bit;
                }
            }
            Tape t;
            const double h = acyclicity_penalty(t.constant(adj), 1.0).scalar();
            if (has_cycle(adj)) {
                CHECK(h > 1e-12);
            } else {
                CHECK(std::abs(h) <= 1e-12);
            }
        }
    }
}

TEST_CASE("elementwise frozen examples") {
    Tape t;
    Matrix v(1, 3);
    v << -1, 0, 2;
    Matrix r = relu(t.constant(v)).value();
    CHECK(r(0, 0) == 0.0);
    CHECK(r(0, 1) == 0.0);
    CHECK(r(0, 2) == 2.0);

    CHECK(sigmoid(t.scalar(0.0)).scalar() == doctest::Approx(0.5));
    CHECK_THROWS_AS(log(t.scalar(-1.0)), DomainError);
    CHECK_THROWS_AS(log(t.scalar(0.0)), DomainError);
}

TEST_CASE("reduce frozen examples") {
    Tape t;
    CHECK(trace(t.constant(Matrix::Identity(3, 3))).scalar() == 3.0);
    Matrix v(1, 2);
    v << 3, 4;
    CHECK(l2_norm_sq(t.constant(v)).scalar() == 25.0);
    Matrix z(1, 2);
    z << 0, 0;
    Matrix s = softmax_rows(t.constant(z)).value();
    CHECK(s(0, 0) == doctest::Approx(0.5));
    CHECK(s(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("softmax rows sum to one within 1e-12") {
    Rng rng(5);
    for (int it = 0; it < 10; ++it) {
        Matrix m = random_matrix(6, 4, rng, -30.0, 30.0);
        Tape t;
        Matrix s = softmax_rows(t.constant(m)).value();
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
            CHECK(std::abs(s.row(i).sum() - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("every differentiable op agrees with central finite differences") {
    // The per-op compositions below are the gradient-correctness gate for the
    // full operation set; 20 seeds, relative tolerance 1e-4.
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        const Matrix a34 = random_matrix(3, 4, rng);
        const Matrix b34 = random_matrix(3, 4, rng);
        const Matrix a33 = random_matrix(3, 3, rng);
        const Matrix b34b = random_matrix(4, 2, rng);
        Matrix dd = random_matrix(4, 4, rng);
        dd.diagonal().array() += 4.0;
        // Keep clear of relu/clamp kinks so the FD comparison is valid.
        Matrix away = a34;
        for (Eigen::Index i = 0; i < away.rows(); ++i)
            for (Eigen::Index j = 0; j < away.cols(); ++j)
                if (std::abs(away(i, j)) < 0.05) away(i, j) = 0.25;
        Matrix positive = (a34.array() + 2.5).matrix();
        const Matrix row = random_matrix(1, 4, rng);

        struct Case {
            const char* name;
            std::function<Tensor(Tape&, std::vector<Tensor>&)> build;
            std::vector<Matrix> inputs;
            double tol;
        };
        const Case cases[] = {
            {"matmul", [](Tape&, std::vector<Tensor>& in) { return sum(matmul(in[0], in[1])); },
             {a34, b34b}, 1e-4},
            {"inverse", [](Tape&, std::vector<Tensor>& in) { return sum(inverse(in[0])); },
             {dd}, 1e-4},
            {"block_matmul",
             [](Tape&, std::vector<Tensor>& in) { return sum(block_matmul(in[0], in[1], 2)); },
             {a33, random_matrix(6, 2, rng)}, 1e-4},
            {"transpose", [](Tape&, std::vector<Tensor>& in) { return l2_norm_sq(transpose(in[0])); },
             {a34}, 1e-4},
            {"add+sub", [](Tape&, std::vector<Tensor>& in) {
                 return l2_norm_sq(sub(add(in[0], in[1]), hadamard(in[0], in[1])));
             }, {a34, b34}, 1e-4},
            {"scale", [](Tape&, std::vector<Tensor>& in) { return sum(scale(in[0], -2.5)); },
             {a34}, 1e-4},
            {"add_rowvec",
             [](Tape&, std::vector<Tensor>& in) { return l2_norm_sq(add_rowvec(in[0], in[1])); },
             {a34, row}, 1e-4},
            {"relu", [](Tape&, std::vector<Tensor>& in) { return sum(relu(in[0])); }, {away}, 1e-4},
            {"sigmoid", [](Tape&, std::vector<Tensor>& in) { return sum(sigmoid(in[0])); },
             {a34}, 1e-4},
            {"tanh", [](Tape&, std::vector<Tensor>& in) { return sum(tanh(in[0])); }, {a34}, 1e-4},
            {"sin", [](Tape&, std::vector<Tensor>& in) { return sum(sin(in[0])); }, {a34}, 1e-4},
            {"exp", [](Tape&, std::vector<Tensor>& in) { return sum(exp(in[0])); }, {a34}, 1e-4},
            {"log", [](Tape&, std::vector<Tensor>& in) { return sum(log(in[0])); },
             {positive}, 1e-4},
            {"square", [](Tape&, std::vector<Tensor>& in) { return sum(square(in[0])); },
             {a34}, 1e-4},
            {"negate", [](Tape&, std::vector<Tensor>& in) { return sum(negate(in[0])); },
             {a34}, 1e-4},
            {"clamp", [](Tape&, std::vector<Tensor>& in) { return sum(clamp(in[0], -0.5, 0.5)); },
             {away}, 1e-4},
            {"reshape", [](Tape&, std::vector<Tensor>& in) {
                 return l2_norm_sq(reshape(in[0], 6, 2));
             }, {a34}, 1e-4},
            {"slice_cols", [](Tape&, std::vector<Tensor>& in) {
                 return l2_norm_sq(slice_cols(in[0], 1, 3));
             }, {a34}, 1e-4},
            {"concat_cols", [](Tape&, std::vector<Tensor>& in) {
                 return l2_norm_sq(concat(in[0], in[1], 1));
             }, {a34, b34}, 1e-4},
            {"concat_rows", [](Tape&, std::vector<Tensor>& in) {
                 return l2_norm_sq(concat(in[0], in[1], 0));
             }, {a34, b34}, 1e-4},
            {"sum", [](Tape&, std::vector<Tensor>& in) { return sum(square(in[0])); }, {a34}, 1e-4},
            {"mean", [](Tape&, std::vector<Tensor>& in) { return mean(square(in[0])); },
             {a34}, 1e-4},
            {"trace", [](Tape&, std::vector<Tensor>& in) { return trace(matmul(in[0], in[0])); },
             {a33}, 1e-4},
            {"l2_norm_sq", [](Tape&, std::vector<Tensor>& in) { return l2_norm_sq(in[0]); },
             {a34}, 1e-4},
            {"max", [](Tape&, std::vector<Tensor>& in) { return max(square(in[0])); },
             {away}, 1e-4},
            {"rowwise_sum", [](Tape&, std::vector<Tensor>& in) {
                 return l2_norm_sq(rowwise_sum(in[0]));
             }, {a34}, 1e-4},
            {"softmax", [](Tape&, std::vector<Tensor>& in) {
                 return l2_norm_sq(softmax_rows(in[0]));
             }, {a34}, 1e-4},
            {"log_softmax", [](Tape&, std::vector<Tensor>& in) {
                 return l2_norm_sq(log_softmax_rows(in[0]));
             }, {a34}, 1e-4},
            {"acyclicity", [](Tape&, std::vector<Tensor>& in) {
                 return acyclicity_penalty(in[0], 0.4);
             }, {a33}, 1e-4},
        };
        for (const Case& c : cases) {
            const double worst = check_gradients(c.build, c.inputs);
            INFO("op=", c.name, " seed=", seed);
            CHECK(worst < c.tol);
        }
    }
}

TEST_CASE("gradient of a random deep composition agrees with finite differences") {
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        Rng rng(seed);
        Matrix x = random_matrix(4, 3, rng);
        Matrix w = random_matrix(3, 3, rng);
        auto build = [](Tape& t, std::vector<Tensor>& in) {
            Tensor h = ad::tanh(matmul(in[0], in[1]));
            Tensor s = softmax_rows(matmul(h, transpose(in[1])));
            Tensor mixed = hadamard(s, ad::sin(in[0]));
            return add(mean(mixed), scale(l2_norm_sq(in[1]), 0.01));
        };
        CHECK(check_gradients(build, {x, w}) < 1e-4);
    }
}

TEST_CASE("forward passes are deterministic") {
    Rng rng(42);
    Matrix a = random_matrix(5, 5, rng);
    auto run = [&]() {
        Tape t;
        Tensor x = t.constant(a);
        return sum(softmax_rows(matmul(ad::exp(scale(x, 0.1)), x))).scalar();
    };
    const double first = run();
    for (int i = 0; i < 5; ++i) CHECK(run() == first);
}

TEST_CASE("gradients accumulate across shared subexpressions") {
    // d/dx of (x*x + x) at 3 is 2*3+1 = 7 through two uses of the same leaf.
    Parameter p{Matrix::Constant(1, 1, 3.0)};
    Tape t;
    Tensor x = t.param(p);
    Tensor loss = add(hadamard(x, x), x);
    t.backward(sum(loss));
    CHECK(p.grad(0, 0) == doctest::Approx(7.0));
}

TEST_CASE("adam zero gradient leaves parameter unchanged") {
    Parameter p{Matrix::Constant(1, 1, 1.25)};
    p.has_grad = true;  // populated, but zero
    auto st = ad::make_adam_state(p, 0.1);
    Parameter* ps[] = {&p};
    ad::AdamState sts[] = {st};
    ad::adam_step(ps, sts);
    CHECK(p.value(0, 0) == 1.25);
}

TEST_CASE("adam first step moves by roughly the learning rate") {
    Parameter p{Matrix::Constant(1, 1, 0.0)};
    p.grad.setConstant(1.0);
    p.has_grad = true;
    auto st = ad::make_adam_state(p, 0.1);
    Parameter* ps[] = {&p};
    ad::AdamState sts[] = {st};
    ad::adam_step(ps, sts);
    CHECK(p.value(0, 0) == doctest::Approx(-0.1).epsilon(1e-6));
    CHECK_FALSE(p.has_grad);
    CHECK(p.grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adam requires a populated gradient") {
    Parameter p{Matrix::Constant(1, 1, 0.0)};
    auto st = ad::make_adam_state(p, 0.1);
    Parameter* ps[] = {&p};
    ad::AdamState sts[] = {st};
    CHECK_THROWS_AS(ad::adam_step(ps, sts), StateError);
}

TEST_CASE("adam minimizes (w-3)^2 from 0 within 2000 steps at lr 0.05") {
    Parameter w{Matrix::Constant(1, 1, 0.0)};
    auto st = ad::make_adam_state(w, 0.05);
    std::vector<ad::AdamState> states = {st};
    Parameter* ps[] = {&w};
    for (int step = 0; step < 2000; ++step) {
        Tape t;
        Tensor wt = t.param(w);
        Tensor loss = l2_norm_sq(add_scalar(wt, -3.0));
        t.backward(loss);
        ad::adam_step(ps, states);
        if (std::abs(w.value(0, 0) - 3.0) < 0.01) break;
    }
    CHECK(std::abs(w.value(0, 0) - 3.0) < 0.01);
}
