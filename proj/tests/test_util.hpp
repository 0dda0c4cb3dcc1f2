#pragma once

#include <functional>
#include <vector>

#include "rcf/autodiff.hpp"
#include "rcf/rng.hpp"

namespace rcf::testutil {

using ad::Matrix;
using ad::Parameter;

// Central finite differences of a scalar function of several matrices.
// Step 1e-5 unless the caller overrides; returns one gradient per input.
inline std::vector<Matrix> finite_difference(
    const std::function<double(const std::vector<Matrix>&)>& f, std::vector<Matrix> inputs,
    double step = 1e-5) {
    std::vector<Matrix> grads;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        Matrix g(inputs[k].rows(), inputs[k].cols());
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
            for (Eigen::Index j = 0; j < g.cols(); ++j) {
                const double orig = inputs[k](i, j);
                inputs[k](i, j) = orig + step;
                const double hi = f(inputs);
                inputs[k](i, j) = orig - step;
                const double lo = f(inputs);
                inputs[k](i, j) = orig;
                g(i, j) = (hi - lo) / (2.0 * step);
            }
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

// Relative disagreement with an absolute floor, suitable for gradient checks.
inline double max_rel_error(const Matrix& a, const Matrix& b, double floor = 1e-6) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            const double denom = std::max({std::abs(a(i, j)), std::abs(b(i, j)), floor});
            worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / denom);
        }
    }
    return worst;
}

// Runs a tape-built scalar composition on `inputs` leased as parameters and
// checks every analytic gradient against central differences.
inline double check_gradients(
    const std::function<ad::Tensor(ad::Tape&, std::vector<ad::Tensor>&)>& build,
    const std::vector<Matrix>& inputs, double step = 1e-5) {
    std::vector<Parameter> params;
    params.reserve(inputs.size());
    for (const Matrix& m : inputs) params.emplace_back(m);

    ad::Tape tape;
    std::vector<ad::Tensor> leased;
    for (Parameter& p : params) leased.push_back(tape.param(p));
    ad::Tensor loss = build(tape, leased);
    tape.backward(loss);

    auto f = [&](const std::vector<Matrix>& xs) {
        ad::Tape t2;
        std::vector<Parameter> ps;
        ps.reserve(xs.size());
        for (const Matrix& m : xs) ps.emplace_back(m);
        std::vector<ad::Tensor> leased2;
        for (Parameter& p : ps) leased2.push_back(t2.param(p));
        return build(t2, leased2).scalar();
    };
    const std::vector<Matrix> fd = finite_difference(f, inputs, step);

    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        worst = std::max(worst, max_rel_error(params[k].grad, fd[k]));
    }
    return worst;
}

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(lo, hi);
    return m;
}

}  // namespace rcf::testutil
